#ifndef STUDYROUTE_VOTE_ENGINE_HPP
#define STUDYROUTE_VOTE_ENGINE_HPP

#include <string>
#include <vector>

#include "studyroute/core.hpp"
#include "studyroute/mapping_db.hpp"

namespace studyroute {

enum class tally_kind { winner, tie, empty };

/// Result of summing a vote set: a unique winner, a tie between the
/// maximal classes, or nothing to tally.
struct tally_outcome {
    tally_kind kind = tally_kind::empty;
    std::string winner_class;  ///< set for winner
    double winner_total = 0.0;
    std::vector<std::string> tied_classes;  ///< sorted, set for tie
};

/// Apply the configured rules to one layer's votes:
///   1. disallow votes from series whose modality differs from the study
///      modality (PET studies exempt their CT/MR series),
///   2. disallow votes from series whose description contains a
///      blacklisted term,
///   3. rewrite votes according to the composition rules (skipped under
///      minimal_vote_rules).
/// Disallowing runs before modification; composition rules fire at most
/// once each and are re-checked to a fixed point (bounded at 10 passes)
/// without chaining inside a single pass.
vote_set apply_vote_rules(const vote_set& votes, const study_bundle& study,
                          const engine_config& config, const mapping_database& db);

/// Sum weights per class and pick the outcome. Totals are accumulated in a
/// canonical order (classes sorted by id, weights sorted within a class) so
/// any permutation of the votes tallies identically. Two totals within a
/// relative 1e-9 of each other count as tied.
tally_outcome tally(const vote_set& votes);

/// Concatenate two vote sets; the result carries the merged-layer tag.
vote_set merge_vote_sets(const vote_set& a, const vote_set& b);

/// Terminal tie-break used by the last decision layer and the Monte Carlo
/// simulator: the tied class holding the largest single vote wins, then the
/// lexicographically smallest class id.
std::string resolve_terminal_tie(const vote_set& votes, const std::vector<std::string>& tied);

}  // namespace studyroute

#endif  // STUDYROUTE_VOTE_ENGINE_HPP
