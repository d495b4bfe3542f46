#ifndef STUDYROUTE_CALIBRATION_HPP
#define STUDYROUTE_CALIBRATION_HPP

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace studyroute {

/// Raw final-layer output for one validation sample.
struct logit_record {
    std::string sample_id;
    std::vector<double> logits;
    int true_class = 0;
};

/// Fitted scaling for one classifier backend.
struct calibration_model {
    double temperature = 1.0;
    int class_count = 0;
    int ece_bins = 10;
};

/// One confidence bin of a reliability histogram. Bins partition [0,1]
/// into equal-width right-closed intervals; a confidence of 0 lands in
/// bin 1. Empty bins report zero confidence and accuracy.
struct reliability_bin {
    int bin_index = 0;  ///< 1-based
    long count = 0;
    double mean_confidence = 0.0;
    double accuracy = 0.0;
};

/// Softmax of logits/T with max-subtraction for stability. T must be > 0.
std::vector<double> scaled_probabilities(std::span<const double> logits, double temperature);

/// Index of the predicted class (first maximal logit). Invariant under any
/// positive temperature.
int predicted_class(std::span<const double> logits);

/// Per-bin counts, mean top-1 confidence and accuracy at temperature T.
std::vector<reliability_bin> reliability_histogram(std::span<const logit_record> records,
                                                   double temperature, int bins);

/// Bin-weighted mean absolute gap between confidence and accuracy.
double ece_from_bins(std::span<const reliability_bin> bins, long total);

/// Expected calibration error of the records at temperature T with the
/// given number of equal-width confidence bins.
double compute_ece(std::span<const logit_record> records, double temperature, int bins);

/// Pick the temperature minimizing the ECE over [search.first,
/// search.second]: a 64-point log-spaced grid followed by golden-section
/// refinement around the grid minimum (relative width 1e-3). Never returns
/// a temperature that calibrates worse than T=1 when 1 lies in the range.
calibration_model fit_temperature(std::span<const logit_record> records, int bins,
                                  std::pair<double, double> search);

/// Load "sample_id,true_class_index,z_0,z_1,..." CSV rows (header row
/// required). Errors carry the offending row number.
std::vector<logit_record> load_logit_records(const std::filesystem::path& path);

}  // namespace studyroute

#endif  // STUDYROUTE_CALIBRATION_HPP
