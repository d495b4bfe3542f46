#ifndef STUDYROUTE_MAPPING_DB_HPP
#define STUDYROUTE_MAPPING_DB_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "studyroute/core.hpp"

namespace studyroute {

/// One class definition prior to validation. load_mapping_db produces
/// these from TSV rows; tests build them directly.
struct class_def {
    std::string class_id;  ///< derived from display_name when empty
    std::string display_name;
    std::string modality_token;
    std::vector<std::string> procedure_codes;
    std::vector<std::string> keywords;
    std::vector<std::string> short_keywords;
    int source_row = 0;  ///< 1-based row in the source file, 0 when built in code
};

/// The validated class registry: canonical classes, their procedure codes
/// and the keyword lists used by the substring matchers. Immutable after
/// construction; safe to share across workers.
class mapping_database {
public:
    const std::vector<study_class>& classes() const { return classes_; }
    const study_class* find(std::string_view class_id) const;
    bool contains(std::string_view class_id) const { return find(class_id) != nullptr; }

    /// Normalized procedure code -> class id.
    const std::map<std::string, std::string>& procedure_codes() const { return procedure_codes_; }
    /// class id -> normalized regular keywords (length >= 6).
    const std::map<std::string, std::vector<std::string>>& keywords() const { return keywords_; }
    /// class id -> normalized short keywords (length 4-5, whole-token match).
    const std::map<std::string, std::vector<std::string>>& short_keywords() const {
        return short_keywords_;
    }
    /// Normalized exact-match target (keyword or display name) -> class ids.
    const std::map<std::string, std::vector<std::string>>& exact_targets() const {
        return exact_targets_;
    }

private:
    friend mapping_database build_database(std::vector<class_def> defs);

    std::vector<study_class> classes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<std::string, std::string> procedure_codes_;
    std::map<std::string, std::vector<std::string>> keywords_;
    std::map<std::string, std::vector<std::string>> short_keywords_;
    std::map<std::string, std::vector<std::string>> exact_targets_;
};

/// Stable class token from a display name: normalized ASCII, uppercase,
/// separator runs become single underscores ("CT Skull + Neck" ->
/// "CT_SKULL_NECK").
std::string class_id_from_display(std::string_view display_name);

/// Validate definitions and assemble a database. Throws load_error on the
/// first violation (duplicate ids, keyword length/uniqueness, PET variants
/// without counterpart, ...). Validation is total: a malformed input never
/// yields a partially usable database.
mapping_database build_database(std::vector<class_def> defs);

/// Load the tab-separated mapping table. Columns: class_id, display_name,
/// modality, procedure_codes, keywords, short_keywords; list columns are
/// '|'-separated; lines starting with '#' are comments.
mapping_database load_mapping_db(const std::filesystem::path& path);

/// Exact lookup of a study's procedure code, after normalization on both
/// sides. Absent when no entry matches.
std::optional<std::string> lookup_procedure_code(std::string_view code,
                                                 const mapping_database& db);

// =============================================================================
// Engine configuration
// =============================================================================

/// "required class set -> replacement class": when votes for every required
/// class are present, they are all rewritten to the replacement.
struct composition_rule {
    std::vector<std::string> required;
    std::string replacement;
};

/// Every tunable of the routing algorithm, from one flat key=value file.
struct engine_config {
    std::vector<std::string> metadata_key_list = {
        "Series Description",
        "Protocol Name",
        "Body Part Examined",
        "Requested Procedure Description",
    };
    std::vector<std::string> blacklist_terms;
    std::vector<composition_rule> composition_rules;
    bool modality_mismatch_disallow = true;
    int network_layer_position = 5;
    bool merged_votes = false;
    bool minimal_vote_rules = false;
    int ece_bins = 10;
    std::pair<double, double> temperature_search{0.05, 20.0};
};

/// Parse a key=value config file. Unset keys keep their defaults; unknown
/// keys and out-of-range values raise load_error.
engine_config load_config(const std::filesystem::path& path);

/// Cross-checks that need the database: composition rule classes exist,
/// blacklist terms are non-empty after normalization.
void validate_config(const engine_config& config, const mapping_database& db);

}  // namespace studyroute

#endif  // STUDYROUTE_MAPPING_DB_HPP
