#include "studyroute/orchestrator.hpp"

#include <algorithm>

#include "studyroute/text_match.hpp"
#include "studyroute/vote_engine.hpp"

namespace studyroute {

namespace {

// L2: the normalized study description equals a keyword or a display name
// outright. Several classes claiming the same target is an ambiguity, which
// escalates like a tie.
std::optional<std::string> exact_description_match(const std::string& normalized,
                                                   const mapping_database& db) {
    if (normalized.empty()) return std::nullopt;
    auto it = db.exact_targets().find(normalized);
    if (it == db.exact_targets().end()) return std::nullopt;
    const auto& ids = it->second;
    if (ids.size() != 1) return std::nullopt;
    return ids.front();
}

// L4 ballot: every configured metadata key of every series runs through the
// keyword matcher; each hit is one equally weighted vote.
vote_set series_metadata_votes(const study_bundle& study, const engine_config& config,
                               const mapping_database& db) {
    vote_set votes;
    votes.layer = layer_kind::series_meta_vote;
    for (const auto& series : study.series) {
        for (const auto& key : config.metadata_key_list) {
            const std::string* raw = nullptr;
            if (key == "Series Description") {
                if (!series.series_description.empty()) raw = &series.series_description;
            } else {
                for (const auto& [k, v] : series.extra_meta)
                    if (k == key) {
                        raw = &v;
                        break;
                    }
            }
            if (!raw) continue;
            auto m = best_keyword_match(normalize_text(*raw), db);
            if (!m) continue;
            vote v;
            v.class_id = m->class_id;
            v.weight = 1.0;
            v.source = vote_source::series_meta;
            v.series_uid = series.series_uid;
            votes.votes.push_back(std::move(v));
        }
    }
    return votes;
}

}  // namespace

layer_plan build_layer_plan(const engine_config& config, bool networks_enabled) {
    layer_plan plan;
    plan.layers = {layer_kind::proc_code, layer_kind::study_desc_exact,
                   layer_kind::study_desc_partial, layer_kind::series_meta_vote};
    if (!networks_enabled) return plan;
    if (config.merged_votes) {
        plan.layers.back() = layer_kind::merged_meta_network_vote;
        return plan;
    }
    int pos = std::clamp(config.network_layer_position, 1, 5);
    plan.layers.insert(plan.layers.begin() + (pos - 1), layer_kind::network_vote);
    return plan;
}

decision classify_study(const study_bundle& study, const mapping_database& db,
                        const engine_config& config, const backend_map& backends) {
    layer_plan plan = build_layer_plan(config, !backends.empty());

    decision result;
    auto decide = [&](const std::string& class_id, layer_kind kind, int position) {
        result.prediction = class_id;
        result.deciding_layer = kind;
        result.deciding_position = position;
    };

    for (std::size_t idx = 0; idx < plan.layers.size(); ++idx) {
        layer_kind kind = plan.layers[idx];
        int position = static_cast<int>(idx) + 1;
        bool terminal = idx + 1 == plan.layers.size();
        vote_set layer_votes;
        layer_votes.layer = kind;

        switch (kind) {
            case layer_kind::proc_code: {
                if (study.procedure_code) {
                    if (auto hit = lookup_procedure_code(*study.procedure_code, db)) {
                        layer_votes.votes.push_back(
                            vote{*hit, 1.0, vote_source::procedure_code, std::nullopt});
                        result.vote_trace.emplace_back(kind, layer_votes);
                        decide(*hit, kind, position);
                        return result;
                    }
                }
                break;
            }
            case layer_kind::study_desc_exact: {
                if (study.study_description) {
                    std::string normalized = normalize_text(*study.study_description);
                    if (auto hit = exact_description_match(normalized, db)) {
                        layer_votes.votes.push_back(
                            vote{*hit, 1.0, vote_source::study_desc_exact, std::nullopt});
                        result.vote_trace.emplace_back(kind, layer_votes);
                        decide(*hit, kind, position);
                        return result;
                    }
                }
                break;
            }
            case layer_kind::study_desc_partial: {
                if (study.study_description) {
                    auto m = best_keyword_match(normalize_text(*study.study_description), db);
                    if (m) {
                        layer_votes.votes.push_back(
                            vote{m->class_id, 1.0, vote_source::study_desc_partial, std::nullopt});
                        result.vote_trace.emplace_back(kind, layer_votes);
                        decide(m->class_id, kind, position);
                        return result;
                    }
                }
                break;
            }
            case layer_kind::series_meta_vote:
            case layer_kind::network_vote:
            case layer_kind::merged_meta_network_vote: {
                vote_set raw;
                if (kind == layer_kind::series_meta_vote) {
                    raw = series_metadata_votes(study, config, db);
                } else if (kind == layer_kind::network_vote) {
                    raw = network_vote_set(study, backends, db);
                } else {
                    raw = merge_vote_sets(series_metadata_votes(study, config, db),
                                          network_vote_set(study, backends, db));
                }
                layer_votes = apply_vote_rules(raw, study, config, db);
                tally_outcome outcome = tally(layer_votes);
                bool network_layer = kind != layer_kind::series_meta_vote;
                if (outcome.kind == tally_kind::winner) {
                    result.vote_trace.emplace_back(kind, layer_votes);
                    decide(outcome.winner_class, kind, position);
                    return result;
                }
                if (outcome.kind == tally_kind::tie && terminal && network_layer) {
                    std::string winner = resolve_terminal_tie(layer_votes, outcome.tied_classes);
                    result.vote_trace.emplace_back(kind, layer_votes);
                    decide(winner, kind, position);
                    return result;
                }
                break;
            }
            case layer_kind::none:
                break;
        }
        result.vote_trace.emplace_back(kind, std::move(layer_votes));
    }
    return result;  // no prediction
}

}  // namespace studyroute
