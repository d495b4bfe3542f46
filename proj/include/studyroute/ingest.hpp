#ifndef STUDYROUTE_INGEST_HPP
#define STUDYROUTE_INGEST_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "studyroute/core.hpp"
#include "studyroute/mapping_db.hpp"

namespace studyroute {

/// What happened while scanning a study directory.
struct ingestion_report {
    long studies_found = 0;
    long series_found = 0;
    /// (series uid, reason) for series whose pixel data could not be used.
    std::vector<std::pair<std::string, std::string>> series_skipped;
    std::vector<std::string> warnings;
};

/// Scan a directory tree of DICOM files, group them into studies and
/// series, and extract the tags the decision hierarchy reads. Undecodable
/// pixel data degrades the series to metadata-only and is reported, never
/// a hard failure. Output is independent of discovery order: studies sort
/// by study UID, series by series UID.
std::pair<std::vector<study_bundle>, ingestion_report> ingest_directory(
    const std::filesystem::path& path, const engine_config& config);

/// Round-trip-exact JSON form of a study bundle.
nlohmann::json bundle_to_json(const study_bundle& bundle);
study_bundle bundle_from_json(const nlohmann::json& j);

}  // namespace studyroute

#endif  // STUDYROUTE_INGEST_HPP
