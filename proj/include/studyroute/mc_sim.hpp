#ifndef STUDYROUTE_MC_SIM_HPP
#define STUDYROUTE_MC_SIM_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "studyroute/core.hpp"

namespace studyroute {

/// Configuration of one Monte Carlo pseudo-study cell. Votes draw their
/// weight T from Beta(4*alpha, 4*(1-alpha)), whose shapes sum to 4 and
/// whose mean is alpha.
struct mc_params {
    double alpha = 0.7;          ///< target per-series accuracy, in (0, 1]
    int series_per_study = 1;    ///< votes per pseudo study (M)
    long n_studies = 0;          ///< pseudo studies per cell (N)
    int n_false_labels = 11;     ///< false labels available per study
    bool correlated = false;     ///< false votes always hit the truth's partner label
    std::uint64_t seed = 0;
};

/// One sample of the accuracy curve. std_accuracy is the per-study
/// binomial spread sqrt(p * (1-p)).
struct mc_curve_point {
    bool correlated = false;
    int series_per_study = 0;
    double alpha = 0.0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
};

/// Stable label token for a pseudo label index ("L003").
std::string mc_label(int index);

/// splitmix64 mix function; substreams are keyed as
/// mix(mix(mix(seed) ^ cell) ^ block) so worker count never changes results.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t block);

/// One simulated, calibrated vote: threshold T ~ Beta(4a, 4(1-a)), draw
/// P ~ U[0,1); P < T votes the truth, otherwise a false label (uniform over
/// the study's false labels, or the truth's fixed partner in correlated
/// mode). The vote carries weight T. alpha = 1 short-circuits to T = 1.
vote simulate_vote(double alpha, int truth_label, int label_count, bool correlated,
                   std::mt19937_64& rng);

/// Simulate one pseudo study: series_per_study votes tallied by the same
/// code the classifier uses, terminal ties broken by largest single weight
/// then label order. Returns whether the weighted majority hit the truth.
bool simulate_study(const mc_params& params, std::mt19937_64& rng);

/// The alphas x series-counts x correlation-modes grid of one experiment
/// run. Output is ordered by (correlated, series count, alpha).
struct mc_grid {
    std::vector<double> alphas;
    std::vector<int> series_counts;
    std::vector<bool> modes = {false};
};

std::vector<mc_curve_point> run_experiment(const mc_grid& grid, long n_studies,
                                           int n_false_labels, std::uint64_t seed, int jobs = 1);

/// Weight-binned accuracy of raw simulated votes, for checking that the
/// simulated voter is calibrated under any binning.
struct vote_statistics {
    long total = 0;
    long correct = 0;
    std::vector<long> bin_count;
    std::vector<long> bin_correct;
    std::vector<double> bin_weight_sum;
};

vote_statistics simulate_vote_statistics(double alpha, long n_votes, int bins,
                                         std::uint64_t seed, bool correlated = false,
                                         int n_false_labels = 11);

/// Bin-weighted mean absolute gap between per-bin accuracy and per-bin mean
/// weight.
double calibration_error(const vote_statistics& stats);

}  // namespace studyroute

#endif  // STUDYROUTE_MC_SIM_HPP
