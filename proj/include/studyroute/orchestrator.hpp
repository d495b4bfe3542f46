#ifndef STUDYROUTE_ORCHESTRATOR_HPP
#define STUDYROUTE_ORCHESTRATOR_HPP

#include <vector>

#include "studyroute/core.hpp"
#include "studyroute/imaging.hpp"
#include "studyroute/mapping_db.hpp"

namespace studyroute {

/// The ordered decision layers one study passes through.
struct layer_plan {
    std::vector<layer_kind> layers;
};

/// Assemble the layer order from the configuration. By default the network
/// layer sits last:
///   [ProcCode, StudyDescExact, StudyDescPartial, SeriesMetaVote, NetworkVote]
/// network_layer_position k moves NetworkVote before the k-th metadata
/// layer; merged_votes folds the network votes into the series-metadata
/// tally instead; networks_enabled=false drops the network entirely.
layer_plan build_layer_plan(const engine_config& config, bool networks_enabled);

/// Run the decision hierarchy for one study: each layer attempts a
/// prediction and the first success wins. Metadata layers escalate on a tie
/// or no votes; a network-bearing terminal layer breaks ties by the largest
/// single vote, then by class id. The returned decision records every
/// entered layer's post-rules votes.
decision classify_study(const study_bundle& study, const mapping_database& db,
                        const engine_config& config, const backend_map& backends);

}  // namespace studyroute

#endif  // STUDYROUTE_ORCHESTRATOR_HPP
