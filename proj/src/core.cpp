#include "studyroute/core.hpp"

#include <algorithm>
#include <cctype>

#include "studyroute/errors.hpp"
#include "studyroute/mapping_db.hpp"

namespace studyroute {

modality parse_modality(std::string_view code) {
    std::string up;
    up.reserve(code.size());
    for (char c : code) {
        if (!std::isspace(static_cast<unsigned char>(c)))
            up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (up == "CT") return modality::ct;
    if (up == "CR" || up == "DX") return modality::cr;
    if (up == "MR" || up == "MRI") return modality::mr;
    if (up == "US") return modality::us;
    if (up == "XA" || up == "DSA" || up == "RF") return modality::xa;
    if (up == "MG") return modality::mg;
    if (up == "PT" || up == "PET") return modality::pt;
    return modality::ot;
}

std::string_view modality_code(modality m) {
    switch (m) {
        case modality::ct: return "CT";
        case modality::cr: return "CR";
        case modality::mr: return "MR";
        case modality::us: return "US";
        case modality::xa: return "XA";
        case modality::mg: return "MG";
        case modality::pt: return "PT";
        case modality::ot: return "OT";
    }
    return "OT";
}

std::string_view vote_source_name(vote_source s) {
    switch (s) {
        case vote_source::procedure_code: return "ProcedureCode";
        case vote_source::study_desc_exact: return "StudyDescExact";
        case vote_source::study_desc_partial: return "StudyDescPartial";
        case vote_source::series_meta: return "SeriesMeta";
        case vote_source::network: return "Network";
    }
    return "SeriesMeta";
}

std::string_view layer_name(layer_kind k) {
    switch (k) {
        case layer_kind::proc_code: return "ProcCode";
        case layer_kind::study_desc_exact: return "StudyDescExact";
        case layer_kind::study_desc_partial: return "StudyDescPartial";
        case layer_kind::series_meta_vote: return "SeriesMetaVote";
        case layer_kind::network_vote: return "NetworkVote";
        case layer_kind::merged_meta_network_vote: return "MergedMetaNetworkVote";
        case layer_kind::none: return "None";
    }
    return "None";
}

const series_record* study_bundle::find_series(std::string_view uid) const {
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const series_record& s) { return s.series_uid == uid; });
    return it == series.end() ? nullptr : &*it;
}

std::string pet_counterpart(const std::string& class_id, const mapping_database& db) {
    const study_class* cls = db.find(class_id);
    if (!cls) throw registry_error("pet_counterpart: unknown class id '" + class_id + "'");
    if (cls->is_pet_variant) return class_id;
    if (cls->mod != modality::ct && cls->mod != modality::mr) return class_id;
    std::string candidate = "PET_" + class_id;
    const study_class* pet = db.find(candidate);
    if (pet && pet->is_pet_variant) return candidate;
    return class_id;
}

}  // namespace studyroute
