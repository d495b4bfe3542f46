#include "studyroute/vote_engine.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "studyroute/text_match.hpp"

namespace studyroute {

namespace {

constexpr double kTieRelTolerance = 1e-9;
constexpr int kMaxCompositionPasses = 10;

bool series_modality_allowed(const series_record& series, const study_bundle& study) {
    if (series.mod == study.study_modality) return true;
    // PET studies carry CT/MR series that are evaluated on their own terms.
    if (study.study_modality == modality::pt &&
        (series.mod == modality::ct || series.mod == modality::mr))
        return true;
    return false;
}

}  // namespace

vote_set apply_vote_rules(const vote_set& votes, const study_bundle& study,
                          const engine_config& config, const mapping_database& db) {
    (void)db;
    vote_set out;
    out.layer = votes.layer;

    std::vector<std::string> blacklist;
    blacklist.reserve(config.blacklist_terms.size());
    for (const auto& term : config.blacklist_terms) {
        std::string norm = normalize_text(term);
        if (!norm.empty()) blacklist.push_back(std::move(norm));
    }

    for (const auto& v : votes.votes) {
        const series_record* series =
            v.series_uid ? study.find_series(*v.series_uid) : nullptr;
        if (series) {
            if (config.modality_mismatch_disallow && !series_modality_allowed(*series, study))
                continue;
            if (!blacklist.empty()) {
                std::string desc = normalize_text(series->series_description);
                bool blacklisted = std::any_of(
                    blacklist.begin(), blacklist.end(),
                    [&desc](const std::string& term) { return desc.find(term) != std::string::npos; });
                if (blacklisted) continue;
            }
        }
        out.votes.push_back(v);
    }

    if (config.minimal_vote_rules || config.composition_rules.empty()) return out;

    std::vector<bool> fired(config.composition_rules.size(), false);
    for (int pass = 0; pass < kMaxCompositionPasses; ++pass) {
        // Required sets are checked against the classes present at the start
        // of the pass, so one rewrite cannot enable another within the pass.
        std::set<std::string> present;
        for (const auto& v : out.votes) present.insert(v.class_id);

        bool changed = false;
        for (std::size_t r = 0; r < config.composition_rules.size(); ++r) {
            if (fired[r]) continue;
            const composition_rule& rule = config.composition_rules[r];
            bool all_present = std::all_of(
                rule.required.begin(), rule.required.end(),
                [&present](const std::string& c) { return present.count(c) > 0; });
            if (!all_present) continue;
            for (auto& v : out.votes) {
                if (std::find(rule.required.begin(), rule.required.end(), v.class_id) !=
                    rule.required.end())
                    v.class_id = rule.replacement;
            }
            fired[r] = true;
            changed = true;
        }
        if (!changed) break;
    }
    return out;
}

tally_outcome tally(const vote_set& votes) {
    if (votes.votes.empty()) return {tally_kind::empty, "", 0.0, {}};

    std::map<std::string, std::vector<double>> per_class;
    for (const auto& v : votes.votes) per_class[v.class_id].push_back(v.weight);

    std::map<std::string, double> totals;
    for (auto& [class_id, weights] : per_class) {
        std::sort(weights.begin(), weights.end());
        double sum = 0.0;
        for (double w : weights) sum += w;
        totals[class_id] = sum;
    }

    double max_total = 0.0;
    for (const auto& [class_id, total] : totals) max_total = std::max(max_total, total);

    std::vector<std::string> top;
    for (const auto& [class_id, total] : totals)
        if (max_total - total <= kTieRelTolerance * max_total) top.push_back(class_id);

    if (top.size() == 1) return {tally_kind::winner, top.front(), totals[top.front()], {}};
    return {tally_kind::tie, "", 0.0, std::move(top)};
}

vote_set merge_vote_sets(const vote_set& a, const vote_set& b) {
    vote_set merged;
    merged.layer = layer_kind::merged_meta_network_vote;
    merged.votes.reserve(a.votes.size() + b.votes.size());
    merged.votes.insert(merged.votes.end(), a.votes.begin(), a.votes.end());
    merged.votes.insert(merged.votes.end(), b.votes.begin(), b.votes.end());
    return merged;
}

std::string resolve_terminal_tie(const vote_set& votes, const std::vector<std::string>& tied) {
    std::string best_class;
    double best_single = -1.0;
    for (const auto& class_id : tied) {
        double single = 0.0;
        for (const auto& v : votes.votes)
            if (v.class_id == class_id) single = std::max(single, v.weight);
        if (single > best_single ||
            (single == best_single && (best_class.empty() || class_id < best_class))) {
            best_single = single;
            best_class = class_id;
        }
    }
    return best_class;
}

}  // namespace studyroute
