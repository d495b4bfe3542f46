#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "studyroute/cli.hpp"
#include "studyroute/errors.hpp"

namespace {

// "0.5:0.95:0.05" (inclusive range) or "0.5,0.7,0.9".
std::vector<double> parse_alpha_spec(const std::string& spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        double start = 0;
        double stop = 0;
        double step = 0;
        if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0)
            throw studyroute::parameter_error("bad alpha range '" + spec + "', want lo:hi:step");
        for (int i = 0;; ++i) {
            double a = start + i * step;
            if (a > stop + step * 1e-9) break;
            out.push_back(a);
        }
        return out;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& spec) {
    std::vector<int> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DICOM study classification routing engine"};
    app.require_subcommand(1);

    studyroute::classify_options classify;
    std::string truth_path;
    std::string minor_path;
    std::string report_path;
    std::vector<std::string> backend_paths;
    auto* classify_cmd = app.add_subcommand("classify", "route a directory of DICOM studies");
    classify_cmd->add_option("--input", classify.input_dir, "study directory")->required();
    classify_cmd->add_option("--db", classify.db_path, "mapping database TSV")->required();
    classify_cmd->add_option("--config", classify.config_path, "engine config file")->required();
    classify_cmd->add_option("--truth", truth_path, "ground truth CSV (enables the report)");
    classify_cmd->add_option("--minor-errors", minor_path, "minor-error pair table");
    classify_cmd->add_option("--backend", backend_paths, "classifier backend file (repeatable)");
    classify_cmd->add_option("--out", classify.predictions_path, "predictions output file");
    classify_cmd->add_option("--report", report_path, "evaluation report file (default stdout)");
    classify_cmd->add_option("--jobs", classify.jobs, "worker threads");

    studyroute::calibrate_options calibrate;
    std::string search_spec;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "fit a softmax temperature");
    calibrate_cmd->add_option("--logits", calibrate.logits_path, "logit CSV file")->required();
    calibrate_cmd->add_option("--bins", calibrate.bins, "confidence bins");
    calibrate_cmd->add_option("--search", search_spec, "temperature range 'low,high'");

    studyroute::simulate_options simulate;
    std::string alpha_spec = "0.5:0.95:0.05";
    std::string series_spec = "1,2,4,8";
    std::string sim_out;
    auto* simulate_cmd = app.add_subcommand("simulate", "pseudo-study voting experiment");
    simulate_cmd->add_option("--alphas", alpha_spec, "alpha grid 'lo:hi:step' or list");
    simulate_cmd->add_option("--series", series_spec, "series counts, comma separated");
    simulate_cmd->add_option("--n", simulate.n_studies, "pseudo studies per cell")->required();
    simulate_cmd->add_option("--seed", simulate.seed, "rng seed");
    simulate_cmd->add_flag("--correlated", simulate.correlated,
                           "also run the maximally correlated variant");
    simulate_cmd->add_option("--false-labels", simulate.n_false_labels,
                             "false labels per study");
    simulate_cmd->add_option("--jobs", simulate.jobs, "worker threads");
    simulate_cmd->add_option("--out", sim_out, "curve output file (default stdout)");

    studyroute::validate_db_options validate;
    std::string validate_config_path;
    std::string validate_minor_path;
    auto* validate_cmd = app.add_subcommand("validate-db", "check database and config files");
    validate_cmd->add_option("--db", validate.db_path, "mapping database TSV")->required();
    validate_cmd->add_option("--config", validate_config_path, "engine config file");
    validate_cmd->add_option("--minor-errors", validate_minor_path, "minor-error pair table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify_cmd->parsed()) {
            if (!truth_path.empty()) classify.truth_path = truth_path;
            if (!minor_path.empty()) classify.minor_errors_path = minor_path;
            if (!report_path.empty()) classify.report_path = report_path;
            for (const auto& p : backend_paths) classify.backend_paths.emplace_back(p);
            return studyroute::cmd_classify(classify, std::cout, std::cerr);
        }
        if (calibrate_cmd->parsed()) {
            if (!search_spec.empty()) {
                double lo = 0;
                double hi = 0;
                if (std::sscanf(search_spec.c_str(), "%lf,%lf", &lo, &hi) != 2)
                    throw studyroute::parameter_error("bad --search, want 'low,high'");
                calibrate.search = {lo, hi};
            }
            return studyroute::cmd_calibrate(calibrate, std::cout, std::cerr);
        }
        if (simulate_cmd->parsed()) {
            simulate.alphas = parse_alpha_spec(alpha_spec);
            simulate.series_counts = parse_int_list(series_spec);
            if (!sim_out.empty()) simulate.out_path = sim_out;
            return studyroute::cmd_simulate(simulate, std::cout, std::cerr);
        }
        if (validate_cmd->parsed()) {
            if (!validate_config_path.empty()) validate.config_path = validate_config_path;
            if (!validate_minor_path.empty()) validate.minor_errors_path = validate_minor_path;
            return studyroute::cmd_validate_db(validate, std::cout, std::cerr);
        }
    } catch (const studyroute::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
