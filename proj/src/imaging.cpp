#include "studyroute/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "studyroute/errors.hpp"
#include "studyroute/mapping_db.hpp"

namespace studyroute {

namespace {

// MG series are classified by the CR network, which was trained to call
// mammograms "conventional radiograph of the mammae"; at the study level
// that prediction stands for the mammography class.
constexpr const char* kCrMammaeClassId = "CONV_MAMMAE";
constexpr const char* kMammographyClassId = "MAMMOGRAPHY";

// Natural cubic spline resampler along one axis of a uniform grid. The
// tridiagonal factorization and the target sample positions depend only on
// the lengths, so one instance is reused across all lines of a plane.
class spline_resampler {
public:
    spline_resampler(int n_src, int n_dst) : n_src_(n_src), n_dst_(n_dst) {
        // Target positions spanning [0, n_src-1].
        positions_.resize(static_cast<std::size_t>(n_dst_));
        intervals_.resize(static_cast<std::size_t>(n_dst_));
        double scale = n_dst_ > 1 ? static_cast<double>(n_src_ - 1) / (n_dst_ - 1) : 0.0;
        for (int k = 0; k < n_dst_; ++k) {
            double t = k * scale;
            int i = std::min(static_cast<int>(t), std::max(n_src_ - 2, 0));
            positions_[k] = t - i;
            intervals_[k] = i;
        }
        // Thomas forward-elimination coefficients for the interior system
        // M[i-1] + 4 M[i] + M[i+1] = rhs[i], natural ends M[0]=M[n-1]=0.
        int interior = std::max(n_src_ - 2, 0);
        denom_.resize(static_cast<std::size_t>(interior));
        double prev = 0.0;
        for (int i = 0; i < interior; ++i) {
            denom_[i] = 4.0 - prev;
            prev = 1.0 / denom_[i];
        }
        rhs_.resize(static_cast<std::size_t>(interior));
        m_.resize(static_cast<std::size_t>(n_src_));
    }

    void resample(const float* src, std::size_t src_stride, float* dst,
                  std::size_t dst_stride) {
        int n = n_src_;
        if (n == 1) {
            for (int k = 0; k < n_dst_; ++k) dst[k * dst_stride] = src[0];
            return;
        }
        int interior = n - 2;
        for (int i = 0; i < interior; ++i) {
            double y0 = src[(i)*src_stride];
            double y1 = src[(i + 1) * src_stride];
            double y2 = src[(i + 2) * src_stride];
            rhs_[i] = 6.0 * (y0 - 2.0 * y1 + y2);
        }
        // Forward sweep, then back substitution.
        for (int i = 1; i < interior; ++i) rhs_[i] -= rhs_[i - 1] / denom_[i - 1];
        m_[0] = 0.0;
        m_[n - 1] = 0.0;
        for (int i = interior - 1; i >= 0; --i) {
            double upper = (i + 1 < interior) ? m_[i + 2] : 0.0;
            m_[i + 1] = (rhs_[i] - upper) / denom_[i];
        }
        for (int k = 0; k < n_dst_; ++k) {
            int i = intervals_[k];
            double s = positions_[k];
            double u = 1.0 - s;
            double y0 = src[i * src_stride];
            double y1 = src[(i + 1) * src_stride];
            double v = u * y0 + s * y1 + (m_[i] * (u * u * u - u) + m_[i + 1] * (s * s * s - s)) / 6.0;
            dst[k * dst_stride] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }

private:
    int n_src_;
    int n_dst_;
    std::vector<double> positions_;
    std::vector<int> intervals_;
    std::vector<double> denom_;
    std::vector<double> rhs_;
    std::vector<double> m_;
};

// Resample both axes; axes of length 1 are replicated rather than splined.
plane resample_any(const plane& src, int target_rows, int target_cols) {
    plane mid(src.rows, target_cols);
    spline_resampler row_pass(src.cols, target_cols);
    for (int r = 0; r < src.rows; ++r)
        row_pass.resample(src.values.data() + static_cast<std::size_t>(r) * src.cols, 1,
                          mid.values.data() + static_cast<std::size_t>(r) * target_cols, 1);
    plane out(target_rows, target_cols);
    spline_resampler col_pass(src.rows, target_rows);
    for (int c = 0; c < target_cols; ++c)
        col_pass.resample(mid.values.data() + c, static_cast<std::size_t>(target_cols),
                          out.values.data() + c, static_cast<std::size_t>(target_cols));
    return out;
}

plane slice_of(const pixel_volume& vol, int z) {
    plane p(vol.ny, vol.nx);
    std::copy_n(vol.values.begin() + static_cast<std::size_t>(z) * vol.ny * vol.nx,
                static_cast<std::size_t>(vol.ny) * vol.nx, p.values.begin());
    return p;
}

}  // namespace

pixel_volume normalize_intensity(const pixel_volume& volume) {
    if (!volume.valid_dims()) throw parameter_error("normalize_intensity: invalid volume dims");
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (float v : volume.values) {
        if (!std::isfinite(v)) throw parameter_error("normalize_intensity: non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    pixel_volume out = volume;
    if (hi == lo) {
        std::fill(out.values.begin(), out.values.end(), 0.0f);
        return out;
    }
    float range = hi - lo;
    for (float& v : out.values) v = (v - lo) / range;
    return out;
}

plane resample_plane(const plane& src, int target_rows, int target_cols) {
    if (src.rows < 2 || src.cols < 2)
        throw parameter_error("resample_plane: source must be at least 2x2");
    if (target_rows < 2 || target_cols < 2)
        throw parameter_error("resample_plane: target must be at least 2x2");
    return resample_any(src, target_rows, target_cols);
}

pixel_volume resample_volume_z(const pixel_volume& vol, int target_z) {
    if (!vol.valid_dims()) throw parameter_error("resample_volume_z: invalid volume dims");
    if (target_z < 1) throw parameter_error("resample_volume_z: target_z must be >= 1");

    pixel_volume out;
    out.nz = target_z;
    out.ny = vol.ny;
    out.nx = vol.nx;
    out.values.resize(static_cast<std::size_t>(target_z) * vol.ny * vol.nx);
    const std::size_t plane_sz = static_cast<std::size_t>(vol.ny) * vol.nx;
    spline_resampler z_pass(vol.nz, target_z);
    for (std::size_t off = 0; off < plane_sz; ++off)
        z_pass.resample(vol.values.data() + off, plane_sz, out.values.data() + off, plane_sz);
    return out;
}

std::array<plane, 3> mip_projections(const pixel_volume& vol) {
    if (!vol.valid_dims()) throw parameter_error("mip_projections: invalid volume dims");
    plane mip_z(vol.ny, vol.nx);
    plane mip_y(vol.nz, vol.nx);
    plane mip_x(vol.nz, vol.ny);
    const float lowest = std::numeric_limits<float>::lowest();
    std::fill(mip_z.values.begin(), mip_z.values.end(), lowest);
    std::fill(mip_y.values.begin(), mip_y.values.end(), lowest);
    std::fill(mip_x.values.begin(), mip_x.values.end(), lowest);
    for (int z = 0; z < vol.nz; ++z) {
        for (int y = 0; y < vol.ny; ++y) {
            for (int x = 0; x < vol.nx; ++x) {
                float v = vol.at(z, y, x);
                mip_z.at(y, x) = std::max(mip_z.at(y, x), v);
                mip_y.at(z, x) = std::max(mip_y.at(z, x), v);
                mip_x.at(z, y) = std::max(mip_x.at(z, y), v);
            }
        }
    }
    return {std::move(mip_z), std::move(mip_y), std::move(mip_x)};
}

preprocessed_input build_input(const pixel_volume& vol) {
    if (!vol.valid_dims()) throw parameter_error("build_input: invalid volume dims");

    preprocessed_input input;
    if (vol.nz < 40) {
        input.kind = input_kind::stack_2d;
        int mid = (vol.nz - 1) / 2;
        int slices[3] = {0, mid, vol.nz - 1};
        for (int c = 0; c < 3; ++c)
            input.channels[c] = resample_any(slice_of(vol, slices[c]), kInputEdge, kInputEdge);
        return input;
    }

    input.kind = input_kind::mip_3d;
    std::array<plane, 3> mips = mip_projections(resample_volume_z(vol, kInputEdge));
    for (int c = 0; c < 3; ++c)
        input.channels[c] = resample_any(mips[static_cast<std::size_t>(c)], kInputEdge, kInputEdge);
    return input;
}

std::uint64_t input_fingerprint(const preprocessed_input& input) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const plane& ch : input.channels)
        mix(ch.values.data(), ch.values.size() * sizeof(float));
    return h;
}

// =============================================================================
// Backends
// =============================================================================

oracle_backend::oracle_backend(modality m, std::vector<std::string> classes,
                               calibration_model cal)
    : modality_(m), classes_(std::move(classes)), calibration_(cal) {
    if (classes_.empty()) throw parameter_error("oracle backend: empty class list");
    calibration_.class_count = static_cast<int>(classes_.size());
}

void oracle_backend::add_entry(std::uint64_t fingerprint, std::vector<double> logits) {
    if (logits.size() != classes_.size())
        throw parameter_error("oracle backend: logit vector length does not match class list");
    table_[fingerprint] = std::move(logits);
}

void oracle_backend::set_fallback(std::vector<double> logits) {
    if (logits.size() != classes_.size())
        throw parameter_error("oracle backend: logit vector length does not match class list");
    fallback_ = std::move(logits);
}

std::vector<double> oracle_backend::infer(const preprocessed_input& input) const {
    auto it = table_.find(input_fingerprint(input));
    if (it != table_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw parameter_error("oracle backend: no entry for fingerprint " +
                          std::to_string(input_fingerprint(input)));
}

oracle_backend load_oracle_backend(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw load_error("backend file: cannot open '" + path.string() + "'");

    std::string format;
    std::string modality_token;
    double temperature = 1.0;
    std::vector<std::string> classes;

    std::string line;
    int row = 0;
    std::vector<std::pair<std::string, int>> data_rows;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = line.substr(1, colon - 1);
            std::string value = line.substr(colon + 1);
            auto strip = [](std::string& s) {
                while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                    s.erase(s.begin());
                while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
                    s.pop_back();
            };
            strip(key);
            strip(value);
            if (key == "format") format = value;
            else if (key == "modality") modality_token = value;
            else if (key == "temperature") temperature = std::stod(value);
            else if (key == "classes") {
                std::stringstream ss(value);
                std::string c;
                while (std::getline(ss, c, ',')) {
                    while (!c.empty() && std::isspace(static_cast<unsigned char>(c.front())))
                        c.erase(c.begin());
                    while (!c.empty() && std::isspace(static_cast<unsigned char>(c.back())))
                        c.pop_back();
                    if (!c.empty()) classes.push_back(c);
                }
            }
            continue;
        }
        data_rows.emplace_back(line, row);
    }

    if (format != "oracle-v1")
        throw load_error("backend file '" + path.string() + "': unsupported format '" + format +
                         "'; known formats: oracle-v1");
    if (classes.empty())
        throw load_error("backend file '" + path.string() + "': missing '# classes:' header");
    if (!(temperature > 0.0))
        throw load_error("backend file '" + path.string() + "': temperature must be > 0");

    calibration_model cal;
    cal.temperature = temperature;
    oracle_backend backend(parse_modality(modality_token), classes, cal);

    for (const auto& [data, data_row] : data_rows) {
        std::stringstream ss(data);
        std::string field;
        std::string fingerprint;
        int class_index = -1;
        std::vector<double> logits;
        int col = 0;
        while (std::getline(ss, field, ',')) {
            ++col;
            try {
                if (col == 1) fingerprint = field;
                else if (col == 2) class_index = std::stoi(field);
                else logits.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw load_error("backend file: row " + std::to_string(data_row) +
                                 ": bad value '" + field + "'");
            }
        }
        if (logits.size() != classes.size())
            throw load_error("backend file: row " + std::to_string(data_row) + ": expected " +
                             std::to_string(classes.size()) + " logits, got " +
                             std::to_string(logits.size()));
        if (class_index < 0 || class_index >= static_cast<int>(classes.size()))
            throw load_error("backend file: row " + std::to_string(data_row) +
                             ": class index out of range");
        if (predicted_class(logits) != class_index)
            throw load_error("backend file: row " + std::to_string(data_row) +
                             ": class index does not match the logit argmax");
        if (fingerprint == "*") {
            backend.set_fallback(std::move(logits));
        } else {
            try {
                backend.add_entry(std::stoull(fingerprint), std::move(logits));
            } catch (const std::exception&) {
                throw load_error("backend file: row " + std::to_string(data_row) +
                                 ": bad fingerprint '" + fingerprint + "'");
            }
        }
    }
    return backend;
}

std::unique_ptr<classifier_backend> load_backend(const std::filesystem::path& path) {
    // Dispatch on the declared format; only the table-driven oracle exists
    // today, real model formats plug in here.
    return std::make_unique<oracle_backend>(load_oracle_backend(path));
}

std::optional<vote> classify_series(const series_record& series,
                                    const classifier_backend& backend, bool pet_study,
                                    const mapping_database& db) {
    if (!series.pixels) return std::nullopt;

    bool mg_on_cr = series.mod == modality::mg && backend.backend_modality() == modality::cr;
    if (backend.backend_modality() != series.mod && !mg_on_cr)
        throw routing_error(std::string("classify_series: series modality ") +
                            std::string(modality_code(series.mod)) + " handed to " +
                            std::string(modality_code(backend.backend_modality())) + " backend");

    preprocessed_input input = build_input(normalize_intensity(*series.pixels));
    std::vector<double> logits = backend.infer(input);
    if (logits.size() != backend.class_list().size())
        throw routing_error("classify_series: backend returned wrong logit count");

    std::vector<double> probs = scaled_probabilities(logits, backend.calibration().temperature);
    int top = predicted_class(logits);
    std::string class_id = backend.class_list()[static_cast<std::size_t>(top)];
    double weight = probs[static_cast<std::size_t>(top)];

    if (series.mod == modality::mg && class_id == kCrMammaeClassId &&
        db.contains(kMammographyClassId))
        class_id = kMammographyClassId;
    if (pet_study && db.contains(class_id)) class_id = pet_counterpart(class_id, db);

    vote v;
    v.class_id = std::move(class_id);
    v.weight = weight;
    v.source = vote_source::network;
    v.series_uid = series.series_uid;
    return v;
}

vote_set network_vote_set(const study_bundle& study, const backend_map& backends,
                          const mapping_database& db) {
    vote_set out;
    out.layer = layer_kind::network_vote;
    bool pet_study = study.study_modality == modality::pt;
    for (const auto& series : study.series) {
        if (!series.pixels) continue;
        if (series.mod == modality::pt) continue;  // pure PET images carry no body-site signal
        modality backend_mod = series.mod == modality::mg ? modality::cr : series.mod;
        auto it = backends.find(backend_mod);
        if (it == backends.end() || it->second == nullptr) continue;
        if (auto v = classify_series(series, *it->second, pet_study, db))
            out.votes.push_back(std::move(*v));
    }
    return out;
}

}  // namespace studyroute
