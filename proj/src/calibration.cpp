#include "studyroute/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "studyroute/errors.hpp"

namespace studyroute {

std::vector<double> scaled_probabilities(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0)) throw parameter_error("temperature must be > 0");
    if (logits.empty()) throw parameter_error("empty logit vector");

    double zmax = -std::numeric_limits<double>::infinity();
    for (double z : logits) zmax = std::max(zmax, z / temperature);

    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] / temperature - zmax);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

int predicted_class(std::span<const double> logits) {
    if (logits.empty()) throw parameter_error("empty logit vector");
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

namespace {

int bin_of(double confidence, int bins) {
    // Right-closed bins ((m-1)/M, m/M]; confidence 0 falls into bin 1.
    int b = static_cast<int>(std::ceil(confidence * bins));
    return std::clamp(b, 1, bins);
}

}  // namespace

std::vector<reliability_bin> reliability_histogram(std::span<const logit_record> records,
                                                   double temperature, int bins) {
    if (records.empty()) throw parameter_error("compute_ece: no records");
    if (bins < 1) throw parameter_error("compute_ece: bins must be >= 1");

    std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    std::vector<long> correct(static_cast<std::size_t>(bins), 0);

    for (const auto& rec : records) {
        std::vector<double> probs = scaled_probabilities(rec.logits, temperature);
        int pred = predicted_class(rec.logits);
        double confidence = probs[static_cast<std::size_t>(pred)];
        int b = bin_of(confidence, bins) - 1;
        counts[b] += 1;
        conf_sum[b] += confidence;
        if (pred == rec.true_class) correct[b] += 1;
    }

    std::vector<reliability_bin> out(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        auto& rb = out[static_cast<std::size_t>(b)];
        rb.bin_index = b + 1;
        rb.count = counts[b];
        if (counts[b] > 0) {
            rb.mean_confidence = conf_sum[b] / static_cast<double>(counts[b]);
            rb.accuracy = static_cast<double>(correct[b]) / static_cast<double>(counts[b]);
        }
    }
    return out;
}

double ece_from_bins(std::span<const reliability_bin> bins, long total) {
    if (total <= 0) throw parameter_error("ece_from_bins: total must be > 0");
    double ece = 0.0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        ece += static_cast<double>(b.count) / static_cast<double>(total) *
               std::abs(b.accuracy - b.mean_confidence);
    }
    return ece;
}

double compute_ece(std::span<const logit_record> records, double temperature, int bins) {
    auto hist = reliability_histogram(records, temperature, bins);
    return ece_from_bins(hist, static_cast<long>(records.size()));
}

calibration_model fit_temperature(std::span<const logit_record> records, int bins,
                                  std::pair<double, double> search) {
    if (records.empty()) throw parameter_error("fit_temperature: no records");
    auto [low, high] = search;
    if (!(low > 0.0) || !(high > low))
        throw parameter_error("fit_temperature: need 0 < low < high");

    auto ece_at = [&](double t) { return compute_ece(records, t, bins); };

    // Coarse log-spaced grid. The ECE is piecewise constant in T with jumps
    // at bin boundaries, so a pure line search cannot be trusted on its own.
    constexpr int kGridPoints = 64;
    double best_t = low;
    double best_ece = ece_at(low);
    double log_lo = std::log(low);
    double log_hi = std::log(high);
    for (int i = 1; i < kGridPoints; ++i) {
        double t = std::exp(log_lo + (log_hi - log_lo) * i / (kGridPoints - 1));
        double e = ece_at(t);
        if (e < best_ece) {
            best_ece = e;
            best_t = t;
        }
    }

    // Golden-section refinement around the winning grid cell.
    double step = (log_hi - log_lo) / (kGridPoints - 1);
    double a = std::max(low, std::exp(std::log(best_t) - step));
    double b = std::min(high, std::exp(std::log(best_t) + step));
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - (b - a) * kInvPhi;
    double x2 = a + (b - a) * kInvPhi;
    double f1 = ece_at(x1);
    double f2 = ece_at(x2);
    while ((b - a) > 1e-3 * b) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - (b - a) * kInvPhi;
            f1 = ece_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + (b - a) * kInvPhi;
            f2 = ece_at(x2);
        }
    }
    double mid = 0.5 * (a + b);
    double fmid = ece_at(mid);
    if (fmid < best_ece) {
        best_ece = fmid;
        best_t = mid;
    }

    // T=1 is the do-nothing fallback; never calibrate worse than it.
    if (low <= 1.0 && 1.0 <= high) {
        double e1 = ece_at(1.0);
        if (e1 < best_ece) {
            best_ece = e1;
            best_t = 1.0;
        }
    }

    calibration_model model;
    model.temperature = best_t;
    model.class_count = static_cast<int>(records.front().logits.size());
    model.ece_bins = bins;
    return model;
}

std::vector<logit_record> load_logit_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw load_error("logit file: cannot open '" + path.string() + "'");

    std::vector<logit_record> records;
    std::string line;
    int row = 0;
    bool saw_header = false;
    std::size_t class_count = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line.rfind("sample_id", 0) != 0)
                throw load_error("logit file: row 1: expected header starting with 'sample_id'");
            saw_header = true;
            continue;
        }

        logit_record rec;
        std::stringstream ss(line);
        std::string field;
        int col = 0;
        while (std::getline(ss, field, ',')) {
            ++col;
            try {
                if (col == 1) {
                    rec.sample_id = field;
                } else if (col == 2) {
                    rec.true_class = std::stoi(field);
                } else {
                    rec.logits.push_back(std::stod(field));
                }
            } catch (const std::exception&) {
                throw load_error("logit file: row " + std::to_string(row) + ": bad value '" +
                                 field + "'");
            }
        }
        if (rec.logits.empty())
            throw load_error("logit file: row " + std::to_string(row) + ": no logits");
        if (rec.true_class < 0 || rec.true_class >= static_cast<int>(rec.logits.size()))
            throw load_error("logit file: row " + std::to_string(row) +
                             ": true class index out of range");
        if (!std::all_of(rec.logits.begin(), rec.logits.end(),
                         [](double z) { return std::isfinite(z); }))
            throw load_error("logit file: row " + std::to_string(row) + ": non-finite logit");
        if (class_count == 0)
            class_count = rec.logits.size();
        else if (rec.logits.size() != class_count)
            throw load_error("logit file: row " + std::to_string(row) +
                             ": inconsistent class count");
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw load_error("logit file: no records in '" + path.string() + "'");
    return records;
}

}  // namespace studyroute
