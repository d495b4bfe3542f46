#include "studyroute/mapping_db.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "studyroute/errors.hpp"
#include "studyroute/text_match.hpp"

namespace studyroute {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep, bool keep_empty = false) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            std::string piece = trim(s.substr(start, i - start));
            if (keep_empty || !piece.empty()) out.push_back(std::move(piece));
            start = i + 1;
        }
    }
    return out;
}

std::string row_prefix(int row) {
    return row > 0 ? "row " + std::to_string(row) + ": " : std::string();
}

}  // namespace

std::string class_id_from_display(std::string_view display_name) {
    std::string normalized = normalize_text(display_name);
    std::replace(normalized.begin(), normalized.end(), ' ', '_');
    return normalized;
}

const study_class* mapping_database::find(std::string_view class_id) const {
    auto it = index_.find(std::string(class_id));
    return it == index_.end() ? nullptr : &classes_[it->second];
}

mapping_database build_database(std::vector<class_def> defs) {
    if (defs.empty()) throw load_error("mapping database: no classes defined");

    mapping_database db;
    std::map<std::string, std::string> keyword_owner;        // normalized keyword -> class id
    std::map<std::string, std::string> short_keyword_owner;  // normalized short keyword -> class id
    std::map<std::string, std::string> code_owner;           // normalized code -> class id

    for (auto& def : defs) {
        const std::string where = row_prefix(def.source_row);
        if (def.display_name.empty())
            throw load_error("mapping database: " + where + "empty display name");
        std::string class_id =
            def.class_id.empty() ? class_id_from_display(def.display_name) : def.class_id;
        if (class_id.empty())
            throw load_error("mapping database: " + where + "class id normalizes to nothing");
        if (db.index_.count(class_id))
            throw load_error("mapping database: " + where + "duplicate class id '" + class_id +
                             "'");

        study_class cls;
        cls.class_id = class_id;
        cls.display_name = def.display_name;
        cls.mod = parse_modality(def.modality_token);
        cls.is_pet_variant = cls.mod == modality::pt && class_id.rfind("PET_", 0) == 0;
        db.index_.emplace(cls.class_id, db.classes_.size());
        db.classes_.push_back(cls);

        for (const auto& code : def.procedure_codes) {
            std::string norm = normalize_text(code);
            if (norm.empty())
                throw load_error("mapping database: " + where + "procedure code '" + code +
                                 "' normalizes to nothing");
            auto [it, inserted] = code_owner.emplace(norm, class_id);
            if (!inserted && it->second != class_id)
                throw load_error("mapping database: " + where + "procedure code '" + norm +
                                 "' mapped to both '" + it->second + "' and '" + class_id + "'");
            db.procedure_codes_[norm] = class_id;
        }

        for (const auto& kw : def.keywords) {
            std::string norm = normalize_text(kw);
            if (norm.size() < 6)
                throw load_error("mapping database: " + where + "keyword too short: '" + kw +
                                 "' (normalized length " + std::to_string(norm.size()) +
                                 ", minimum 6)");
            auto [it, inserted] = keyword_owner.emplace(norm, class_id);
            if (!inserted && it->second != class_id)
                throw load_error("mapping database: " + where + "keyword '" + norm +
                                 "' mapped to both '" + it->second + "' and '" + class_id + "'");
            if (inserted) db.keywords_[class_id].push_back(norm);
        }

        for (const auto& kw : def.short_keywords) {
            std::string norm = normalize_text(kw);
            if (norm.size() < 4 || norm.size() > 5)
                throw load_error("mapping database: " + where + "short keyword '" + kw +
                                 "' has normalized length " + std::to_string(norm.size()) +
                                 ", expected 4-5");
            auto [it, inserted] = short_keyword_owner.emplace(norm, class_id);
            if (!inserted && it->second != class_id)
                throw load_error("mapping database: " + where + "short keyword '" + norm +
                                 "' mapped to both '" + it->second + "' and '" + class_id + "'");
            if (inserted) db.short_keywords_[class_id].push_back(norm);
        }
    }

    // PET variants need a non-PET counterpart under the same token.
    for (const auto& cls : db.classes_) {
        if (!cls.is_pet_variant) continue;
        std::string counterpart_id = cls.class_id.substr(4);
        const study_class* counterpart = db.find(counterpart_id);
        if (!counterpart || counterpart->is_pet_variant)
            throw load_error("mapping database: PET variant '" + cls.class_id +
                             "' has no counterpart class '" + counterpart_id + "'");
    }

    // Exact-match targets: every keyword plus the normalized display name.
    auto add_target = [&db](const std::string& target, const std::string& class_id) {
        auto& ids = db.exact_targets_[target];
        if (std::find(ids.begin(), ids.end(), class_id) == ids.end()) ids.push_back(class_id);
    };
    for (const auto& cls : db.classes_) add_target(normalize_text(cls.display_name), cls.class_id);
    for (const auto& [class_id, kws] : db.keywords_)
        for (const auto& kw : kws) add_target(kw, class_id);
    for (const auto& [class_id, kws] : db.short_keywords_)
        for (const auto& kw : kws) add_target(kw, class_id);

    return db;
}

mapping_database load_mapping_db(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw load_error("mapping database: cannot open '" + path.string() + "'");

    std::vector<class_def> defs;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        std::vector<std::string> cols = split(line, '\t', /*keep_empty=*/true);
        if (cols.size() < 5 || cols.size() > 6)
            throw load_error("mapping database: row " + std::to_string(row) + ": expected 6 "
                             "tab-separated columns (short_keywords may be omitted), got " +
                             std::to_string(cols.size()));
        class_def def;
        def.class_id = cols[0];
        def.display_name = cols[1];
        def.modality_token = cols[2];
        def.procedure_codes = split(cols[3], '|');
        def.keywords = split(cols[4], '|');
        if (cols.size() == 6) def.short_keywords = split(cols[5], '|');
        def.source_row = row;
        defs.push_back(std::move(def));
    }
    if (defs.empty()) throw load_error("mapping database: no classes defined");
    return build_database(std::move(defs));
}

std::optional<std::string> lookup_procedure_code(std::string_view code,
                                                 const mapping_database& db) {
    std::string norm = normalize_text(code);
    if (norm.empty()) return std::nullopt;
    auto it = db.procedure_codes().find(norm);
    if (it == db.procedure_codes().end()) return std::nullopt;
    return it->second;
}

// =============================================================================
// Configuration file
// =============================================================================

namespace {

const char* kValidKeys =
    "metadata_key_list, blacklist, compose, modality_mismatch_disallow, "
    "network_layer_position, merged_votes, minimal_vote_rules, ece_bins, temperature_search";

bool parse_bool(const std::string& value, const std::string& key) {
    std::string v;
    for (char c : value) v.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw load_error("config: key '" + key + "': expected boolean, got '" + value + "'");
}

long parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw load_error("config: key '" + key + "': expected integer, got '" + value + "'");
    }
}

double parse_real(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw load_error("config: key '" + key + "': expected number, got '" + value + "'");
    }
}

composition_rule parse_compose(const std::string& value, int row) {
    // "CT_THORAX + CT_ABDOMEN -> CT_THORAX_ABDOMEN"
    std::size_t arrow = value.find("->");
    if (arrow == std::string::npos)
        throw load_error("config: row " + std::to_string(row) +
                         ": compose rule needs 'A + B -> C' form");
    composition_rule rule;
    rule.replacement = trim(value.substr(arrow + 2));
    for (auto& part : split(value.substr(0, arrow), '+')) rule.required.push_back(trim(part));
    if (rule.required.empty() || rule.replacement.empty())
        throw load_error("config: row " + std::to_string(row) +
                         ": compose rule needs 'A + B -> C' form");
    return rule;
}

}  // namespace

engine_config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw load_error("config: cannot open '" + path.string() + "'");

    engine_config config;
    bool saw_metadata_keys = false;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw load_error("config: row " + std::to_string(row) + ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));

        if (key == "metadata_key_list") {
            if (!saw_metadata_keys) {
                config.metadata_key_list.clear();
                saw_metadata_keys = true;
            }
            for (auto& k : split(value, ',')) config.metadata_key_list.push_back(k);
        } else if (key == "blacklist") {
            for (auto& term : split(value, ',')) config.blacklist_terms.push_back(term);
        } else if (key == "compose") {
            config.composition_rules.push_back(parse_compose(value, row));
        } else if (key == "modality_mismatch_disallow") {
            config.modality_mismatch_disallow = parse_bool(value, key);
        } else if (key == "network_layer_position") {
            long v = parse_int(value, key);
            if (v < 1 || v > 5)
                throw load_error("config: network_layer_position must be in 1..5, got " +
                                 value);
            config.network_layer_position = static_cast<int>(v);
        } else if (key == "merged_votes") {
            config.merged_votes = parse_bool(value, key);
        } else if (key == "minimal_vote_rules") {
            config.minimal_vote_rules = parse_bool(value, key);
        } else if (key == "ece_bins") {
            long v = parse_int(value, key);
            if (v < 1) throw load_error("config: ece_bins must be >= 1, got " + value);
            config.ece_bins = static_cast<int>(v);
        } else if (key == "temperature_search") {
            auto parts = split(value, ',');
            if (parts.size() != 2)
                throw load_error("config: temperature_search needs 'low, high'");
            double lo = parse_real(parts[0], key);
            double hi = parse_real(parts[1], key);
            if (!(lo > 0.0) || !(hi > lo))
                throw load_error("config: temperature_search needs 0 < low < high");
            config.temperature_search = {lo, hi};
        } else {
            throw load_error("config: row " + std::to_string(row) + ": unknown key '" + key +
                             "'; valid keys: " + kValidKeys);
        }
    }
    return config;
}

void validate_config(const engine_config& config, const mapping_database& db) {
    for (const auto& rule : config.composition_rules) {
        for (const auto& req : rule.required)
            if (!db.contains(req))
                throw load_error("config: compose rule references unknown class '" + req + "'");
        if (!db.contains(rule.replacement))
            throw load_error("config: compose rule replacement class '" + rule.replacement +
                             "' not in mapping database");
    }
    for (const auto& term : config.blacklist_terms)
        if (normalize_text(term).empty())
            throw load_error("config: blacklist term '" + term + "' normalizes to nothing");
    for (const auto& key : config.metadata_key_list)
        if (key.empty()) throw load_error("config: empty metadata key name");
}

}  // namespace studyroute
