#include "studyroute/ingest.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "studyroute/dicom.hpp"
#include "studyroute/errors.hpp"

namespace studyroute {

namespace {

struct key_tag {
    const char* name;
    dicom::tag t;
};

// Metadata key names accepted in EngineConfig.metadata_key_list.
constexpr key_tag kKnownKeys[] = {
    {"Series Description", dicom::kSeriesDescription},
    {"Protocol Name", dicom::kProtocolName},
    {"Body Part Examined", dicom::kBodyPartExamined},
    {"Requested Procedure Description", dicom::kRequestedProcedureDescription},
    {"Study Description", dicom::kStudyDescription},
};

const dicom::tag* tag_for_key(const std::string& name) {
    for (const auto& k : kKnownKeys)
        if (name == k.name) return &k.t;
    return nullptr;
}

struct parsed_file {
    std::filesystem::path path;
    dicom::data_set ds;
    long instance_number = 0;
};

// Decode one file's frames into float planes appended to `volume`.
// Returns an error string instead of throwing; pixel trouble must not
// abort ingestion.
std::string append_frames(const parsed_file& file, int rows, int cols,
                          std::vector<float>& volume) {
    if (file.ds.truncated) return "truncated pixel data";
    if (file.ds.encapsulated_pixels) return "compressed pixel data";
    const auto* raw = file.ds.raw(dicom::kPixelData);
    if (!raw) return "no pixel data";

    long bits = file.ds.integer(dicom::kBitsAllocated).value_or(0);
    long pixrep = file.ds.integer(dicom::kPixelRepresentation).value_or(0);
    long frames = file.ds.integer(dicom::kNumberOfFrames).value_or(1);
    long samples = file.ds.integer(dicom::kSamplesPerPixel).value_or(1);
    if (samples != 1) return "unsupported samples per pixel";  // greyscale only
    if (bits != 8 && bits != 16) return "unsupported bits allocated";
    if (frames < 1) return "bad number of frames";

    std::size_t bytes_per_pixel = static_cast<std::size_t>(bits) / 8;
    std::size_t need = static_cast<std::size_t>(rows) * cols * frames * bytes_per_pixel;
    if (raw->size() < need) return "truncated pixel data";

    const std::uint8_t* p = raw->data();
    std::size_t n = static_cast<std::size_t>(rows) * cols * frames;
    volume.reserve(volume.size() + n);
    for (std::size_t i = 0; i < n; ++i) {
        float v;
        if (bits == 8) {
            v = pixrep ? static_cast<float>(static_cast<std::int8_t>(p[i]))
                       : static_cast<float>(p[i]);
        } else {
            std::uint16_t u = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
            v = pixrep ? static_cast<float>(static_cast<std::int16_t>(u))
                       : static_cast<float>(u);
        }
        volume.push_back(v);
    }
    return "";
}

modality derive_study_modality(const std::vector<modality>& series_modalities) {
    if (series_modalities.empty()) return modality::ot;
    if (std::find(series_modalities.begin(), series_modalities.end(), modality::pt) !=
        series_modalities.end())
        return modality::pt;
    std::map<std::string, int> counts;
    for (modality m : series_modalities) counts[std::string(modality_code(m))] += 1;
    std::string best;
    int best_count = 0;
    for (const auto& [code, count] : counts) {
        if (count > best_count) {
            best = code;
            best_count = count;
        }
    }
    return parse_modality(best);
}

std::optional<std::string> procedure_code_of(const dicom::data_set& ds) {
    const auto* seq = ds.sequence(dicom::kProcedureCodeSequence);
    if (!seq || seq->empty()) return std::nullopt;
    return seq->front().text(dicom::kCodeValue);
}

}  // namespace

std::pair<std::vector<study_bundle>, ingestion_report> ingest_directory(
    const std::filesystem::path& path, const engine_config& config) {
    namespace fs = std::filesystem;
    if (!fs::exists(path) || !fs::is_directory(path))
        throw load_error("ingest: '" + path.string() + "' is not a readable directory");

    ingestion_report report;

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    // study uid -> series uid -> files
    std::map<std::string, std::map<std::string, std::vector<parsed_file>>> grouped;
    for (const auto& file : files) {
        dicom::data_set ds;
        try {
            ds = dicom::read_file(file);
        } catch (const load_error& e) {
            report.warnings.push_back("skipped " + file.filename().string() + ": " + e.what());
            continue;
        }
        auto study_uid = ds.text(dicom::kStudyInstanceUid);
        auto series_uid = ds.text(dicom::kSeriesInstanceUid);
        if (!study_uid || !series_uid) {
            report.warnings.push_back("skipped " + file.filename().string() +
                                      ": missing study or series instance UID");
            continue;
        }
        parsed_file pf;
        pf.path = file;
        pf.instance_number = ds.integer(dicom::kInstanceNumber).value_or(0);
        pf.ds = std::move(ds);
        grouped[*study_uid][*series_uid].push_back(std::move(pf));
    }
    if (grouped.empty())
        report.warnings.push_back("no DICOM files found under '" + path.string() + "'");

    std::vector<study_bundle> bundles;
    for (auto& [study_uid, series_map] : grouped) {
        study_bundle bundle;
        bundle.study_uid = study_uid;

        std::vector<modality> series_modalities;
        for (auto& [series_uid, pfiles] : series_map) {
            std::stable_sort(pfiles.begin(), pfiles.end(),
                             [](const parsed_file& a, const parsed_file& b) {
                                 return a.instance_number < b.instance_number;
                             });

            series_record series;
            series.series_uid = series_uid;
            for (const auto& pf : pfiles) {
                if (auto m = pf.ds.text(dicom::kModality)) {
                    series.mod = parse_modality(*m);
                    break;
                }
            }
            for (const auto& pf : pfiles) {
                if (auto d = pf.ds.text(dicom::kSeriesDescription)) {
                    series.series_description = *d;
                    break;
                }
            }
            for (const auto& key : config.metadata_key_list) {
                if (key == "Series Description") continue;  // dedicated field
                const dicom::tag* t = tag_for_key(key);
                if (!t) continue;
                for (const auto& pf : pfiles) {
                    if (auto v = pf.ds.text(*t)) {
                        series.extra_meta.emplace_back(key, *v);
                        break;
                    }
                }
            }

            // Pixel assembly: frames stack along Z in instance order. A
            // truncated file is treated as broken pixel data even when the
            // pixel element itself did not survive the parse.
            bool any_pixels = std::any_of(pfiles.begin(), pfiles.end(), [](const parsed_file& pf) {
                return pf.ds.has(dicom::kPixelData) || pf.ds.truncated ||
                       pf.ds.encapsulated_pixels;
            });
            if (any_pixels) {
                std::string fail;
                long rows = 0;
                long cols = 0;
                std::vector<float> volume;
                for (const auto& pf : pfiles) {
                    long r = pf.ds.integer(dicom::kRows).value_or(0);
                    long c = pf.ds.integer(dicom::kColumns).value_or(0);
                    if (r < 1 || c < 1) {
                        fail = "missing rows/columns";
                        break;
                    }
                    if (rows == 0) {
                        rows = r;
                        cols = c;
                    } else if (r != rows || c != cols) {
                        fail = "inconsistent frame geometry";
                        break;
                    }
                    fail = append_frames(pf, static_cast<int>(r), static_cast<int>(c), volume);
                    if (!fail.empty()) break;
                }
                if (fail.empty() && !volume.empty()) {
                    pixel_volume vol;
                    vol.ny = static_cast<int>(rows);
                    vol.nx = static_cast<int>(cols);
                    vol.nz = static_cast<int>(volume.size() /
                                              (static_cast<std::size_t>(rows) * cols));
                    vol.values = std::move(volume);
                    series.pixels = std::move(vol);
                } else {
                    report.series_skipped.emplace_back(series_uid,
                                                       fail.empty() ? "no decodable frames"
                                                                    : fail);
                }
            }

            series_modalities.push_back(series.mod);
            bundle.series.push_back(std::move(series));
            ++report.series_found;
        }

        // Study-level tags come from the first file that carries them.
        for (const auto& [series_uid, pfiles] : series_map) {
            for (const auto& pf : pfiles) {
                if (!bundle.study_description)
                    bundle.study_description = pf.ds.text(dicom::kStudyDescription);
                if (!bundle.procedure_code) bundle.procedure_code = procedure_code_of(pf.ds);
            }
        }
        std::optional<std::string> mods_in_study;
        for (const auto& [series_uid, pfiles] : series_map)
            for (const auto& pf : pfiles)
                if (!mods_in_study) mods_in_study = pf.ds.text(dicom::kModalitiesInStudy);
        if (mods_in_study) {
            std::vector<modality> listed;
            std::string token;
            for (char c : *mods_in_study + "\\") {
                if (c == '\\') {
                    if (!token.empty()) listed.push_back(parse_modality(token));
                    token.clear();
                } else {
                    token.push_back(c);
                }
            }
            bundle.study_modality = derive_study_modality(listed);
        } else {
            bundle.study_modality = derive_study_modality(series_modalities);
        }

        bundles.push_back(std::move(bundle));
        ++report.studies_found;
    }
    return {std::move(bundles), std::move(report)};
}

// =============================================================================
// JSON round trip
// =============================================================================

nlohmann::json bundle_to_json(const study_bundle& bundle) {
    nlohmann::json j;
    j["study_uid"] = bundle.study_uid;
    j["study_modality"] = std::string(modality_code(bundle.study_modality));
    j["procedure_code"] =
        bundle.procedure_code ? nlohmann::json(*bundle.procedure_code) : nlohmann::json();
    j["study_description"] =
        bundle.study_description ? nlohmann::json(*bundle.study_description) : nlohmann::json();
    j["series"] = nlohmann::json::array();
    for (const auto& s : bundle.series) {
        nlohmann::json js;
        js["series_uid"] = s.series_uid;
        js["modality"] = std::string(modality_code(s.mod));
        js["series_description"] = s.series_description;
        js["extra_meta"] = nlohmann::json::array();
        for (const auto& [k, v] : s.extra_meta) js["extra_meta"].push_back({k, v});
        if (s.pixels) {
            nlohmann::json jp;
            jp["dims"] = {s.pixels->nz, s.pixels->ny, s.pixels->nx};
            jp["values"] = s.pixels->values;
            js["pixels"] = std::move(jp);
        } else {
            js["pixels"] = nlohmann::json();
        }
        j["series"].push_back(std::move(js));
    }
    return j;
}

study_bundle bundle_from_json(const nlohmann::json& j) {
    study_bundle bundle;
    bundle.study_uid = j.at("study_uid").get<std::string>();
    bundle.study_modality = parse_modality(j.at("study_modality").get<std::string>());
    if (!j.at("procedure_code").is_null())
        bundle.procedure_code = j.at("procedure_code").get<std::string>();
    if (!j.at("study_description").is_null())
        bundle.study_description = j.at("study_description").get<std::string>();
    for (const auto& js : j.at("series")) {
        series_record s;
        s.series_uid = js.at("series_uid").get<std::string>();
        s.mod = parse_modality(js.at("modality").get<std::string>());
        s.series_description = js.at("series_description").get<std::string>();
        for (const auto& kv : js.at("extra_meta"))
            s.extra_meta.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
        if (!js.at("pixels").is_null()) {
            pixel_volume vol;
            vol.nz = js.at("pixels").at("dims").at(0).get<int>();
            vol.ny = js.at("pixels").at("dims").at(1).get<int>();
            vol.nx = js.at("pixels").at("dims").at(2).get<int>();
            vol.values = js.at("pixels").at("values").get<std::vector<float>>();
            s.pixels = std::move(vol);
        }
        bundle.series.push_back(std::move(s));
    }
    return bundle;
}

}  // namespace studyroute
