#include <doctest.h>

#include <random>

#include "studyroute/errors.hpp"
#include "studyroute/ingest.hpp"
#include "studyroute/mapping_db.hpp"

using namespace studyroute;

namespace {

mapping_database shipped_db() {
    return load_mapping_db(std::filesystem::path(STUDYROUTE_DATA_DIR) / "mapping_db.tsv");
}

}  // namespace

TEST_CASE("parse_modality maps codes and aliases, unknown becomes OT") {
    CHECK(parse_modality("CT") == modality::ct);
    CHECK(parse_modality("ct") == modality::ct);
    CHECK(parse_modality("MR") == modality::mr);
    CHECK(parse_modality("MRI") == modality::mr);
    CHECK(parse_modality("PT") == modality::pt);
    CHECK(parse_modality("PET") == modality::pt);
    CHECK(parse_modality("XA") == modality::xa);
    CHECK(parse_modality("MG") == modality::mg);
    CHECK(parse_modality("US") == modality::us);
    CHECK(parse_modality("CR") == modality::cr);
    CHECK(parse_modality("NM") == modality::ot);
    CHECK(parse_modality("") == modality::ot);
    CHECK(parse_modality("garbage") == modality::ot);
}

TEST_CASE("pet_counterpart maps CT/MR classes onto their PET variants") {
    auto db = shipped_db();
    CHECK(pet_counterpart("CT_SKULL", db) == "PET_CT_SKULL");
    CHECK(pet_counterpart("MRI_THORAX", db) == "PET_MRI_THORAX");
    // already a PET variant
    CHECK(pet_counterpart("PET_MRI_THORAX", db) == "PET_MRI_THORAX");
    // no PET variant exists for ultrasound
    CHECK(pet_counterpart("ULTRASOUND_NECK", db) == "ULTRASOUND_NECK");
    // CT class without a PET twin
    CHECK(pet_counterpart("CT_ABDOMEN", db) == "CT_ABDOMEN");
    CHECK_THROWS_AS(pet_counterpart("NOT_A_CLASS", db), registry_error);
}

TEST_CASE("pet_counterpart is idempotent over the whole registry") {
    auto db = shipped_db();
    for (const auto& cls : db.classes()) {
        std::string once = pet_counterpart(cls.class_id, db);
        CHECK(pet_counterpart(once, db) == once);
    }
}

TEST_CASE("study bundles round-trip through JSON bit for bit") {
    study_bundle bundle;
    bundle.study_uid = "1.2.840.99.1";
    bundle.study_modality = modality::pt;
    bundle.procedure_code = "30057";
    // study_description stays absent: absent and empty must be distinct
    series_record a;
    a.series_uid = "1.2.840.99.1.1";
    a.mod = modality::ct;
    a.series_description = "PET CT SCHADEL";
    a.extra_meta = {{"Protocol Name", "helical"}, {"Body Part Examined", "HEAD"}};
    pixel_volume vol;
    vol.nz = 2;
    vol.ny = 2;
    vol.nx = 3;
    vol.values = {0.0f, 0.125f, 1.0f, 0.33333333f, 3.1415926f, -7.25f,
                  42.0f, 1e-20f, 65535.0f, 0.1f, 0.2f, 0.3f};
    a.pixels = vol;
    series_record b;
    b.series_uid = "1.2.840.99.1.2";
    b.mod = modality::pt;
    bundle.series = {a, b};

    study_bundle round = bundle_from_json(bundle_to_json(bundle));
    CHECK(round.study_uid == bundle.study_uid);
    CHECK(round.study_modality == bundle.study_modality);
    CHECK(round.procedure_code == bundle.procedure_code);
    CHECK_FALSE(round.study_description.has_value());
    REQUIRE(round.series.size() == 2);
    CHECK(round.series[0].series_description == a.series_description);
    CHECK(round.series[0].extra_meta == a.extra_meta);
    REQUIRE(round.series[0].pixels.has_value());
    CHECK(round.series[0].pixels->nz == 2);
    CHECK(round.series[0].pixels->values == vol.values);  // exact float equality
    CHECK_FALSE(round.series[1].pixels.has_value());

    // serializing again yields the identical byte stream
    CHECK(bundle_to_json(bundle).dump() == bundle_to_json(round).dump());
}

TEST_CASE("find_series resolves by uid") {
    study_bundle bundle;
    series_record s;
    s.series_uid = "abc";
    bundle.series.push_back(s);
    CHECK(bundle.find_series("abc") != nullptr);
    CHECK(bundle.find_series("xyz") == nullptr);
}

TEST_CASE("random study bundles round-trip through JSON") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<float> value(-1e6f, 1e6f);
    std::uniform_int_distribution<int> dim(1, 5);
    auto random_string = [&](int max_len) {
        std::string s;
        int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_len));
        for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('a' + rng() % 26));
        return s;
    };
    const modality modalities[] = {modality::ct, modality::cr, modality::mr, modality::us,
                                   modality::xa, modality::mg, modality::pt, modality::ot};

    for (int round = 0; round < 50; ++round) {
        study_bundle bundle;
        bundle.study_uid = random_string(12);
        bundle.study_modality = modalities[rng() % 8];
        if (rng() % 2) bundle.procedure_code = random_string(8);
        if (rng() % 2) bundle.study_description = random_string(20);
        int n_series = static_cast<int>(rng() % 4);
        for (int s = 0; s < n_series; ++s) {
            series_record series;
            series.series_uid = random_string(12);
            series.mod = modalities[rng() % 8];
            if (rng() % 2) series.series_description = random_string(16);
            int n_meta = static_cast<int>(rng() % 3);
            for (int m = 0; m < n_meta; ++m)
                series.extra_meta.emplace_back(random_string(6), random_string(10));
            if (rng() % 2) {
                pixel_volume vol;
                vol.nz = dim(rng);
                vol.ny = dim(rng);
                vol.nx = dim(rng);
                vol.values.resize(static_cast<std::size_t>(vol.nz) * vol.ny * vol.nx);
                for (auto& v : vol.values) v = value(rng);
                series.pixels = std::move(vol);
            }
            bundle.series.push_back(std::move(series));
        }

        study_bundle round_tripped = bundle_from_json(bundle_to_json(bundle));
        CHECK(bundle_to_json(round_tripped).dump() == bundle_to_json(bundle).dump());
        CHECK(round_tripped.study_uid == bundle.study_uid);
        CHECK(round_tripped.procedure_code == bundle.procedure_code);
        CHECK(round_tripped.study_description == bundle.study_description);
        REQUIRE(round_tripped.series.size() == bundle.series.size());
        for (std::size_t s = 0; s < bundle.series.size(); ++s) {
            CHECK(round_tripped.series[s].extra_meta == bundle.series[s].extra_meta);
            CHECK(round_tripped.series[s].pixels.has_value() ==
                  bundle.series[s].pixels.has_value());
            if (bundle.series[s].pixels)
                CHECK(round_tripped.series[s].pixels->values ==
                      bundle.series[s].pixels->values);
        }
    }
}
