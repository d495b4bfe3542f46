#ifndef STUDYROUTE_CORE_HPP
#define STUDYROUTE_CORE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace studyroute {

class mapping_database;

// =============================================================================
// Modality
// =============================================================================

/// Imaging device family. OT collects everything the engine has no
/// dedicated handling for.
enum class modality : std::uint8_t { ct, cr, mr, us, xa, mg, pt, ot };

/// Parse a DICOM modality code ("CT", "MR", ...). Accepts the common
/// aliases MRI -> MR, PET -> PT and DSA -> XA. Unknown strings yield
/// modality::ot, never a failure.
modality parse_modality(std::string_view code);

/// Canonical two-letter token for a modality.
std::string_view modality_code(modality m);

// =============================================================================
// Study classes
// =============================================================================

/// One canonical study class of the recipient institution.
struct study_class {
    std::string class_id;      ///< stable token, unique within a database
    std::string display_name;  ///< human-readable name
    modality mod = modality::ot;
    bool is_pet_variant = false;  ///< has a non-PET counterpart class
};

/// Maps a non-PET CT/MR class onto its PET variant when one exists in the
/// database ("CT_SKULL" -> "PET_CT_SKULL"); any other class id is returned
/// unchanged. Idempotent. Throws registry_error for unknown ids.
std::string pet_counterpart(const std::string& class_id, const mapping_database& db);

// =============================================================================
// Studies and series
// =============================================================================

/// Decoded pixel data of one series, dims (Z, Y, X), row-major.
struct pixel_volume {
    int nz = 0;
    int ny = 0;
    int nx = 0;
    std::vector<float> values;  ///< size nz * ny * nx

    float at(int z, int y, int x) const {
        return values[static_cast<std::size_t>((z * ny + y)) * nx + x];
    }
    float& at(int z, int y, int x) {
        return values[static_cast<std::size_t>((z * ny + y)) * nx + x];
    }
    std::size_t size() const { return values.size(); }
    bool valid_dims() const {
        return nz >= 1 && ny >= 1 && nx >= 1 &&
               values.size() == static_cast<std::size_t>(nz) * ny * nx;
    }
};

/// One acquisition within a study. extra_meta holds the configured
/// metadata keys in configuration order; absent tags are simply not
/// present (never stored as empty strings).
struct series_record {
    std::string series_uid;
    modality mod = modality::ot;
    std::string series_description;  ///< raw tag value, empty when absent
    std::vector<std::pair<std::string, std::string>> extra_meta;
    std::optional<pixel_volume> pixels;
};

/// One external examination event. A metadata-only study (no series, or
/// series without pixel data) is legal input.
struct study_bundle {
    std::string study_uid;
    modality study_modality = modality::ot;
    std::optional<std::string> procedure_code;
    std::optional<std::string> study_description;
    std::vector<series_record> series;

    const series_record* find_series(std::string_view uid) const;
};

// =============================================================================
// Votes and decisions
// =============================================================================

/// Which matcher produced a vote.
enum class vote_source : std::uint8_t {
    procedure_code,
    study_desc_exact,
    study_desc_partial,
    series_meta,
    network,
};

std::string_view vote_source_name(vote_source s);

/// One weighted class vote. Metadata matches carry weight 1, network
/// votes carry the calibrated top-1 probability.
struct vote {
    std::string class_id;
    double weight = 0.0;
    vote_source source = vote_source::series_meta;
    std::optional<std::string> series_uid;
};

/// Decision layers of the hierarchy. merged_meta_network_vote replaces
/// the separate series-metadata and network layers when votes are merged.
enum class layer_kind : std::uint8_t {
    proc_code,
    study_desc_exact,
    study_desc_partial,
    series_meta_vote,
    network_vote,
    merged_meta_network_vote,
    none,
};

std::string_view layer_name(layer_kind k);

/// Votes produced by one layer (after rule application, when rules ran).
struct vote_set {
    std::vector<vote> votes;
    layer_kind layer = layer_kind::none;
};

/// Final routing outcome for one study. prediction is absent if and only
/// if deciding_layer == none; vote_trace lists every layer that was
/// entered, in hierarchy order.
struct decision {
    std::optional<std::string> prediction;
    layer_kind deciding_layer = layer_kind::none;
    int deciding_position = 0;  ///< 1-based position in the layer plan, 0 when undecided
    std::vector<std::pair<layer_kind, vote_set>> vote_trace;
};

}  // namespace studyroute

#endif  // STUDYROUTE_CORE_HPP
