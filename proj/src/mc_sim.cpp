#include "studyroute/mc_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "studyroute/errors.hpp"
#include "studyroute/vote_engine.hpp"

namespace studyroute {

std::string mc_label(int index) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "L%03d", index);
    return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t block) {
    return splitmix64(splitmix64(splitmix64(seed) ^ cell) ^ block);
}

namespace {

double draw_beta_threshold(double alpha, std::mt19937_64& rng) {
    if (alpha >= 1.0) return 1.0;  // Beta(4, 0) in the limit
    std::gamma_distribution<double> gp(4.0 * alpha, 1.0);
    std::gamma_distribution<double> gq(4.0 * (1.0 - alpha), 1.0);
    double x = gp(rng);
    double y = gq(rng);
    if (x + y <= 0.0) return alpha;  // both shapes underflowed
    double t = x / (x + y);
    return std::clamp(t, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

vote simulate_vote(double alpha, int truth_label, int label_count, bool correlated,
                   std::mt19937_64& rng) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw parameter_error("simulate_vote: alpha must be in (0, 1]");
    if (label_count < 2) throw parameter_error("simulate_vote: need at least 2 labels");

    double threshold = draw_beta_threshold(alpha, rng);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double p = uniform(rng);

    int label;
    if (p < threshold) {
        label = truth_label;
    } else if (correlated) {
        label = (truth_label + 1) % label_count;
    } else {
        std::uniform_int_distribution<int> pick(0, label_count - 2);
        int j = pick(rng);
        label = j >= truth_label ? j + 1 : j;
    }

    vote v;
    v.class_id = mc_label(label);
    v.weight = threshold;
    v.source = vote_source::network;
    return v;
}

bool simulate_study(const mc_params& params, std::mt19937_64& rng) {
    int label_count = params.n_false_labels + 1;
    std::uniform_int_distribution<int> pick_truth(0, label_count - 1);
    int truth = pick_truth(rng);

    vote_set votes;
    votes.layer = layer_kind::network_vote;
    votes.votes.reserve(static_cast<std::size_t>(params.series_per_study));
    for (int m = 0; m < params.series_per_study; ++m)
        votes.votes.push_back(
            simulate_vote(params.alpha, truth, label_count, params.correlated, rng));

    tally_outcome outcome = tally(votes);
    std::string winner;
    if (outcome.kind == tally_kind::winner)
        winner = outcome.winner_class;
    else if (outcome.kind == tally_kind::tie)
        winner = resolve_terminal_tie(votes, outcome.tied_classes);
    return winner == mc_label(truth);
}

namespace {

constexpr long kBlockSize = 1 << 16;

long run_block(const mc_params& params, std::uint64_t cell, std::uint64_t block,
               long n_in_block) {
    std::mt19937_64 rng(substream_seed(params.seed, cell, block));
    long correct = 0;
    mc_params p = params;
    for (long i = 0; i < n_in_block; ++i)
        if (simulate_study(p, rng)) ++correct;
    return correct;
}

}  // namespace

std::vector<mc_curve_point> run_experiment(const mc_grid& grid, long n_studies,
                                           int n_false_labels, std::uint64_t seed, int jobs) {
    if (n_studies <= 0) throw parameter_error("run_experiment: n_studies must be > 0");
    if (grid.alphas.empty() || grid.series_counts.empty() || grid.modes.empty())
        throw parameter_error("run_experiment: empty grid");
    jobs = std::max(jobs, 1);

    struct cell_spec {
        mc_params params;
        std::uint64_t index;
    };
    std::vector<cell_spec> cells;
    std::uint64_t cell_index = 0;
    for (bool mode : grid.modes) {
        for (int series : grid.series_counts) {
            for (double alpha : grid.alphas) {
                mc_params p;
                p.alpha = alpha;
                p.series_per_study = series;
                p.n_studies = n_studies;
                p.n_false_labels = n_false_labels;
                p.correlated = mode;
                p.seed = seed;
                cells.push_back({p, cell_index++});
            }
        }
    }

    long blocks_per_cell = (n_studies + kBlockSize - 1) / kBlockSize;
    struct task {
        std::size_t cell;
        std::uint64_t block;
        long count;
    };
    std::vector<task> tasks;
    tasks.reserve(cells.size() * static_cast<std::size_t>(blocks_per_cell));
    for (std::size_t c = 0; c < cells.size(); ++c) {
        long remaining = n_studies;
        for (std::uint64_t b = 0; remaining > 0; ++b) {
            long n = std::min(remaining, kBlockSize);
            tasks.push_back({c, b, n});
            remaining -= n;
        }
    }

    // Per-(cell, block) counts are integers, so the reduction is exact no
    // matter how tasks are scheduled across workers.
    std::vector<long> block_correct(tasks.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) break;
            const task& tk = tasks[t];
            block_correct[t] =
                run_block(cells[tk.cell].params, cells[tk.cell].index, tk.block, tk.count);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<long> cell_correct(cells.size(), 0);
    for (std::size_t t = 0; t < tasks.size(); ++t)
        cell_correct[tasks[t].cell] += block_correct[t];

    std::vector<mc_curve_point> points;
    points.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const mc_params& p = cells[c].params;
        double mean = static_cast<double>(cell_correct[c]) / static_cast<double>(n_studies);
        mc_curve_point pt;
        pt.correlated = p.correlated;
        pt.series_per_study = p.series_per_study;
        pt.alpha = p.alpha;
        pt.mean_accuracy = mean;
        pt.std_accuracy = std::sqrt(std::max(mean * (1.0 - mean), 0.0));
        points.push_back(pt);
    }
    return points;
}

vote_statistics simulate_vote_statistics(double alpha, long n_votes, int bins,
                                         std::uint64_t seed, bool correlated,
                                         int n_false_labels) {
    if (n_votes <= 0) throw parameter_error("simulate_vote_statistics: n_votes must be > 0");
    if (bins < 1) throw parameter_error("simulate_vote_statistics: bins must be >= 1");

    vote_statistics stats;
    stats.bin_count.assign(static_cast<std::size_t>(bins), 0);
    stats.bin_correct.assign(static_cast<std::size_t>(bins), 0);
    stats.bin_weight_sum.assign(static_cast<std::size_t>(bins), 0.0);

    int label_count = n_false_labels + 1;
    std::mt19937_64 rng(substream_seed(seed, 0, 0));
    std::uniform_int_distribution<int> pick_truth(0, label_count - 1);
    for (long i = 0; i < n_votes; ++i) {
        int truth = pick_truth(rng);
        vote v = simulate_vote(alpha, truth, label_count, correlated, rng);
        bool correct = v.class_id == mc_label(truth);
        int b = std::clamp(static_cast<int>(std::ceil(v.weight * bins)), 1, bins) - 1;
        stats.total += 1;
        if (correct) stats.correct += 1;
        stats.bin_count[b] += 1;
        stats.bin_weight_sum[b] += v.weight;
        if (correct) stats.bin_correct[b] += 1;
    }
    return stats;
}

double calibration_error(const vote_statistics& stats) {
    if (stats.total <= 0) throw parameter_error("calibration_error: empty statistics");
    double err = 0.0;
    for (std::size_t b = 0; b < stats.bin_count.size(); ++b) {
        long n = stats.bin_count[b];
        if (n == 0) continue;
        double acc = static_cast<double>(stats.bin_correct[b]) / static_cast<double>(n);
        double conf = stats.bin_weight_sum[b] / static_cast<double>(n);
        err += static_cast<double>(n) / static_cast<double>(stats.total) * std::abs(acc - conf);
    }
    return err;
}

}  // namespace studyroute
