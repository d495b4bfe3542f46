#include "studyroute/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "studyroute/errors.hpp"
#include "studyroute/evaluation.hpp"
#include "studyroute/imaging.hpp"
#include "studyroute/ingest.hpp"
#include "studyroute/mc_sim.hpp"
#include "studyroute/orchestrator.hpp"

namespace studyroute {

namespace {

// Writes a whole file through a temp path + rename, so consumers never see
// a partial file on error.
class atomic_writer {
public:
    explicit atomic_writer(const std::filesystem::path& target)
        : target_(target), tmp_(target.string() + ".tmp"), out_(tmp_, std::ios::binary) {
        if (!out_) throw load_error("cannot open '" + tmp_.string() + "' for writing");
    }
    ~atomic_writer() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }
    std::ostream& stream() { return out_; }
    void commit() {
        out_.flush();
        if (!out_) throw load_error("write failed for '" + tmp_.string() + "'");
        out_.close();
        std::filesystem::rename(tmp_, target_);
        committed_ = true;
    }

private:
    std::filesystem::path target_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

std::string format_double(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

nlohmann::json decision_to_json(const study_bundle& bundle, const decision& dec) {
    nlohmann::json j;
    j["study_uid"] = bundle.study_uid;
    j["prediction"] = dec.prediction ? nlohmann::json(*dec.prediction) : nlohmann::json();
    j["deciding_layer"] = std::string(layer_name(dec.deciding_layer));
    j["deciding_position"] = dec.deciding_position;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& [layer, votes] : dec.vote_trace) {
        nlohmann::json jl;
        jl["layer"] = std::string(layer_name(layer));
        nlohmann::json jv = nlohmann::json::array();
        for (const auto& v : votes.votes) {
            nlohmann::json vote_json;
            vote_json["class"] = v.class_id;
            vote_json["weight"] = v.weight;
            vote_json["source"] = std::string(vote_source_name(v.source));
            vote_json["series_uid"] =
                v.series_uid ? nlohmann::json(*v.series_uid) : nlohmann::json();
            jv.push_back(std::move(vote_json));
        }
        jl["votes"] = std::move(jv);
        trace.push_back(std::move(jl));
    }
    j["trace"] = std::move(trace);
    return j;
}

}  // namespace

int cmd_classify(const classify_options& options, std::ostream& out, std::ostream& err) {
    try {
        mapping_database db = load_mapping_db(options.db_path);
        engine_config config = load_config(options.config_path);
        validate_config(config, db);

        std::vector<std::unique_ptr<classifier_backend>> owned;
        backend_map backends;
        for (const auto& path : options.backend_paths) {
            auto backend = load_backend(path);
            modality m = backend->backend_modality();
            if (backends.count(m))
                throw load_error("two backends configured for modality " +
                                 std::string(modality_code(m)));
            backends[m] = backend.get();
            owned.push_back(std::move(backend));
        }

        auto [bundles, report] = ingest_directory(options.input_dir, config);
        for (const auto& w : report.warnings) err << "warning: " << w << "\n";
        for (const auto& [uid, reason] : report.series_skipped)
            err << "series " << uid << ": pixel data skipped (" << reason << ")\n";

        // Parallel per study; the output order is fixed by the ingest sort,
        // so the worker count never shows in the results.
        int jobs = std::max(options.jobs, 1);
        bool serialize = std::any_of(backends.begin(), backends.end(), [](const auto& kv) {
            return kv.second && !kv.second->thread_safe();
        });
        if (serialize) jobs = 1;

        std::vector<decision> decisions(bundles.size());
        std::atomic<std::size_t> next{0};
        std::mutex failure_mutex;
        std::string failure;
        auto worker = [&]() {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= bundles.size()) break;
                try {
                    decisions[i] = classify_study(bundles[i], db, config, backends);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (failure.empty())
                        failure = "study " + bundles[i].study_uid + ": " + e.what();
                }
            }
        };
        if (jobs == 1 || bundles.size() < 2) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (!failure.empty()) throw load_error("classification failed: " + failure);

        {
            atomic_writer writer(options.predictions_path);
            for (std::size_t i = 0; i < bundles.size(); ++i)
                writer.stream() << decision_to_json(bundles[i], decisions[i]).dump() << "\n";
            writer.commit();
        }
        err << "classified " << bundles.size() << " studies -> "
            << options.predictions_path.string() << "\n";

        if (options.truth_path) {
            auto truths = load_ground_truth(*options.truth_path, &db);
            std::map<std::string, const ground_truth*> by_uid;
            for (const auto& t : truths) by_uid[t.study_uid] = &t;

            minor_error_table minor_table;
            if (options.minor_errors_path)
                minor_table = load_minor_error_table(*options.minor_errors_path, &db);
            std::vector<std::pair<decision, grade_kind>> graded;
            for (std::size_t i = 0; i < bundles.size(); ++i) {
                auto it = by_uid.find(bundles[i].study_uid);
                if (it == by_uid.end()) {
                    err << "warning: no ground truth for study " << bundles[i].study_uid
                        << "\n";
                    continue;
                }
                graded.emplace_back(decisions[i],
                                    grade(decisions[i], *it->second, minor_table, db));
            }
            eval_report ev = aggregate(graded);
            if (options.report_path) {
                atomic_writer writer(*options.report_path);
                write_report(writer.stream(), ev);
                writer.commit();
            } else {
                write_report(out, ev);
            }
        }
        return 0;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_calibrate(const calibrate_options& options, std::ostream& out, std::ostream& err) {
    try {
        auto records = load_logit_records(options.logits_path);
        double ece_before = compute_ece(records, 1.0, options.bins);
        calibration_model model = fit_temperature(records, options.bins, options.search);
        double ece_after = compute_ece(records, model.temperature, options.bins);

        out << "records = " << records.size() << "\n";
        out << "class_count = " << model.class_count << "\n";
        out << "bins = " << options.bins << "\n";
        out << "temperature = " << format_double(model.temperature, 6) << "\n";
        out << "ece_before = " << format_double(ece_before, 6) << "\n";
        out << "ece_after = " << format_double(ece_after, 6) << "\n";
        out << "bin,count,mean_confidence,accuracy\n";
        for (const auto& bin : reliability_histogram(records, model.temperature, options.bins))
            out << bin.bin_index << "," << bin.count << ","
                << format_double(bin.mean_confidence, 6) << ","
                << format_double(bin.accuracy, 6) << "\n";
        return 0;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_simulate(const simulate_options& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.n_studies <= 0) throw parameter_error("simulate: --n must be > 0");
        if (options.alphas.empty()) throw parameter_error("simulate: no alphas given");
        if (options.series_counts.empty()) throw parameter_error("simulate: no series counts");
        for (double a : options.alphas)
            if (!(a > 0.0) || a > 1.0)
                throw parameter_error("simulate: alpha must be in (0, 1]");
        for (int m : options.series_counts)
            if (m < 1) throw parameter_error("simulate: series counts must be >= 1");

        mc_grid grid;
        grid.alphas = options.alphas;
        grid.series_counts = options.series_counts;
        grid.modes = options.correlated ? std::vector<bool>{false, true}
                                        : std::vector<bool>{false};

        auto points = run_experiment(grid, options.n_studies, options.n_false_labels,
                                     options.seed, options.jobs);

        std::ostringstream body;
        body << "# rng: mt19937_64 with splitmix64 substreams keyed by (seed, cell, block)\n";
        body << "# seed: " << options.seed << "\n";
        body << "# n_studies: " << options.n_studies << "\n";
        body << "correlated,series_per_study,alpha,mean,std\n";
        for (const auto& p : points)
            body << (p.correlated ? 1 : 0) << "," << p.series_per_study << ","
                 << format_double(p.alpha, 6) << "," << format_double(p.mean_accuracy, 8)
                 << "," << format_double(p.std_accuracy, 8) << "\n";

        if (options.out_path) {
            atomic_writer writer(*options.out_path);
            writer.stream() << body.str();
            writer.commit();
        } else {
            out << body.str();
        }
        return 0;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_validate_db(const validate_db_options& options, std::ostream& out, std::ostream& err) {
    int failures = 0;
    std::optional<mapping_database> db;

    auto run_check = [&](const std::string& name, auto&& fn) {
        try {
            std::string detail = fn();
            out << name << ": PASS" << (detail.empty() ? "" : " (" + detail + ")") << "\n";
        } catch (const error& e) {
            out << name << ": FAIL (" << e.what() << ")\n";
            ++failures;
        }
    };

    run_check("mapping_db", [&]() {
        db = load_mapping_db(options.db_path);
        return std::to_string(db->classes().size()) + " classes";
    });
    if (options.config_path) {
        run_check("config", [&]() {
            engine_config config = load_config(*options.config_path);
            if (db) validate_config(config, *db);
            return std::string();
        });
    }
    if (options.minor_errors_path) {
        run_check("minor_errors", [&]() {
            minor_error_table table =
                load_minor_error_table(*options.minor_errors_path, db ? &*db : nullptr);
            return std::to_string(table.pair_count()) + " pairs";
        });
    }

    if (failures > 0) {
        err << failures << " check(s) failed\n";
        return 1;
    }
    return 0;
}

}  // namespace studyroute
