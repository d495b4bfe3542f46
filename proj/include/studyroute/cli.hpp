#ifndef STUDYROUTE_CLI_HPP
#define STUDYROUTE_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace studyroute {

/// classify: ingest a directory, route every study, write one JSON record
/// per line; with ground truth, also emit the evaluation report.
struct classify_options {
    std::filesystem::path input_dir;
    std::filesystem::path db_path;
    std::filesystem::path config_path;
    std::optional<std::filesystem::path> truth_path;
    std::optional<std::filesystem::path> minor_errors_path;
    std::vector<std::filesystem::path> backend_paths;
    std::filesystem::path predictions_path = "predictions.jsonl";
    std::optional<std::filesystem::path> report_path;  ///< stdout when unset
    int jobs = 1;
};
int cmd_classify(const classify_options& options, std::ostream& out, std::ostream& err);

/// calibrate: fit the temperature on a logit file, print the fitted T, the
/// ECE before/after and the reliability histogram rows.
struct calibrate_options {
    std::filesystem::path logits_path;
    int bins = 10;
    std::pair<double, double> search{0.05, 20.0};
};
int cmd_calibrate(const calibrate_options& options, std::ostream& out, std::ostream& err);

/// simulate: run the pseudo-study voting experiment over a grid and emit
/// "correlated,series_per_study,alpha,mean,std" rows.
struct simulate_options {
    std::vector<double> alphas;
    std::vector<int> series_counts;
    long n_studies = 0;
    std::uint64_t seed = 0;
    bool correlated = false;  ///< also simulate the correlated variant
    int n_false_labels = 11;
    int jobs = 1;
    std::optional<std::filesystem::path> out_path;  ///< stdout when unset
};
int cmd_simulate(const simulate_options& options, std::ostream& out, std::ostream& err);

/// validate-db: run every database validation plus the cross-checks and
/// print a pass/fail table.
struct validate_db_options {
    std::filesystem::path db_path;
    std::optional<std::filesystem::path> config_path;
    std::optional<std::filesystem::path> minor_errors_path;
};
int cmd_validate_db(const validate_db_options& options, std::ostream& out, std::ostream& err);

}  // namespace studyroute

#endif  // STUDYROUTE_CLI_HPP
