#include <doctest.h>

#include <algorithm>
#include <random>

#include "studyroute/vote_engine.hpp"

using namespace studyroute;

namespace {

vote make_vote(std::string class_id, double weight,
               std::optional<std::string> series = std::nullopt) {
    vote v;
    v.class_id = std::move(class_id);
    v.weight = weight;
    v.source = vote_source::series_meta;
    v.series_uid = std::move(series);
    return v;
}

vote_set make_set(std::vector<vote> votes) {
    vote_set s;
    s.votes = std::move(votes);
    s.layer = layer_kind::series_meta_vote;
    return s;
}

mapping_database ct_db() {
    std::vector<class_def> defs;
    for (const char* name : {"CT Thorax", "CT Abdomen", "CT Thorax + Abdomen", "CT Skull"}) {
        class_def def;
        def.display_name = name;
        def.modality_token = "CT";
        def.keywords = {std::string("KW ") + name};
        defs.push_back(def);
    }
    return build_database(std::move(defs));
}

study_bundle ct_study() {
    study_bundle study;
    study.study_uid = "S1";
    study.study_modality = modality::ct;
    for (const char* uid : {"se1", "se2", "se3"}) {
        series_record s;
        s.series_uid = uid;
        s.mod = modality::ct;
        study.series.push_back(s);
    }
    return study;
}

}  // namespace

TEST_CASE("tally finds the simple majority") {
    auto outcome = tally(make_set({make_vote("A", 1), make_vote("A", 1), make_vote("B", 1)}));
    CHECK(outcome.kind == tally_kind::winner);
    CHECK(outcome.winner_class == "A");
    CHECK(outcome.winner_total == doctest::Approx(2.0));
}

TEST_CASE("tally reports ties and empty sets") {
    auto tie = tally(make_set({make_vote("A", 1), make_vote("B", 1)}));
    CHECK(tie.kind == tally_kind::tie);
    CHECK(tie.tied_classes == std::vector<std::string>{"A", "B"});

    auto empty = tally(make_set({}));
    CHECK(empty.kind == tally_kind::empty);
}

TEST_CASE("tally sums confidence weights") {
    auto outcome =
        tally(make_set({make_vote("A", 0.4), make_vote("B", 0.35), make_vote("B", 0.3)}));
    CHECK(outcome.kind == tally_kind::winner);
    CHECK(outcome.winner_class == "B");
    CHECK(outcome.winner_total == doctest::Approx(0.65));
}

TEST_CASE("tally near-tie tolerance treats 1e-9-relative totals as tied") {
    auto outcome = tally(make_set({make_vote("A", 1.0), make_vote("B", 1.0 + 1e-12)}));
    CHECK(outcome.kind == tally_kind::tie);
    auto clear = tally(make_set({make_vote("A", 1.0), make_vote("B", 1.0 + 1e-6)}));
    CHECK(clear.kind == tally_kind::winner);
}

TEST_CASE("tally is permutation invariant") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> weight(0.01, 1.0);
    std::uniform_int_distribution<int> cls(0, 4);
    for (int round = 0; round < 200; ++round) {
        std::vector<vote> votes;
        int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i)
            votes.push_back(make_vote(std::string(1, static_cast<char>('A' + cls(rng))),
                                      weight(rng)));
        auto base = tally(make_set(votes));
        for (int shuffle = 0; shuffle < 5; ++shuffle) {
            std::shuffle(votes.begin(), votes.end(), rng);
            auto again = tally(make_set(votes));
            CHECK(again.kind == base.kind);
            CHECK(again.winner_class == base.winner_class);
            CHECK(again.winner_total == base.winner_total);  // bit-for-bit
            CHECK(again.tied_classes == base.tied_classes);
        }
    }
}

TEST_CASE("composition rule rewrites thorax+abdomen votes") {
    auto db = ct_db();
    auto study = ct_study();
    engine_config config;
    config.composition_rules.push_back({{"CT_THORAX", "CT_ABDOMEN"}, "CT_THORAX_ABDOMEN"});

    auto in = make_set({make_vote("CT_THORAX", 1, "se1"), make_vote("CT_ABDOMEN", 1, "se2")});
    auto out = apply_vote_rules(in, study, config, db);
    REQUIRE(out.votes.size() == 2);
    CHECK(out.votes[0].class_id == "CT_THORAX_ABDOMEN");
    CHECK(out.votes[1].class_id == "CT_THORAX_ABDOMEN");
    CHECK(tally(out).winner_class == "CT_THORAX_ABDOMEN");

    // weights preserved through the rewrite
    double before = 0;
    double after = 0;
    for (const auto& v : in.votes) before += v.weight;
    for (const auto& v : out.votes) after += v.weight;
    CHECK(before == after);
}

TEST_CASE("composition rule needs the full required set") {
    auto db = ct_db();
    auto study = ct_study();
    engine_config config;
    config.composition_rules.push_back({{"CT_THORAX", "CT_ABDOMEN"}, "CT_THORAX_ABDOMEN"});
    auto out = apply_vote_rules(make_set({make_vote("CT_THORAX", 1, "se1")}), study, config, db);
    REQUIRE(out.votes.size() == 1);
    CHECK(out.votes[0].class_id == "CT_THORAX");
}

TEST_CASE("blacklisted series descriptions lose their votes") {
    auto db = ct_db();
    auto study = ct_study();
    study.series[0].series_description = "SCREENSHOT 1";
    engine_config config;
    config.blacklist_terms = {"screenshot"};

    auto out = apply_vote_rules(
        make_set({make_vote("CT_THORAX", 1, "se1"), make_vote("CT_ABDOMEN", 1, "se2")}), study,
        config, db);
    REQUIRE(out.votes.size() == 1);
    CHECK(out.votes[0].class_id == "CT_ABDOMEN");
}

TEST_CASE("modality mismatch disallows votes, PET studies exempt CT/MR") {
    auto db = ct_db();
    engine_config config;

    study_bundle study = ct_study();
    study.series[1].mod = modality::us;  // stray ultrasound series in a CT study
    auto out = apply_vote_rules(
        make_set({make_vote("CT_THORAX", 1, "se1"), make_vote("CT_ABDOMEN", 1, "se2")}), study,
        config, db);
    REQUIRE(out.votes.size() == 1);
    CHECK(out.votes[0].class_id == "CT_THORAX");

    study_bundle pet = ct_study();
    pet.study_modality = modality::pt;
    pet.series[0].mod = modality::ct;
    pet.series[1].mod = modality::mr;
    pet.series[2].mod = modality::us;
    auto kept = apply_vote_rules(make_set({make_vote("A", 1, "se1"), make_vote("B", 1, "se2"),
                                           make_vote("C", 1, "se3")}),
                                 pet, config, db);
    REQUIRE(kept.votes.size() == 2);  // the US vote is gone, CT and MR stay

    config.modality_mismatch_disallow = false;
    auto all = apply_vote_rules(make_set({make_vote("A", 1, "se3")}), pet, config, db);
    CHECK(all.votes.size() == 1);
}

TEST_CASE("votes without a series pass the series rules untouched") {
    auto db = ct_db();
    auto study = ct_study();
    engine_config config;
    config.blacklist_terms = {"screenshot"};
    auto out = apply_vote_rules(make_set({make_vote("CT_THORAX", 1)}), study, config, db);
    CHECK(out.votes.size() == 1);
}

TEST_CASE("empty vote set stays empty") {
    auto db = ct_db();
    auto study = ct_study();
    engine_config config;
    auto out = apply_vote_rules(make_set({}), study, config, db);
    CHECK(out.votes.empty());
}

TEST_CASE("minimal_vote_rules skips composition but keeps disallowing") {
    auto db = ct_db();
    auto study = ct_study();
    study.series[0].series_description = "DOSE REPORT";
    engine_config config;
    config.minimal_vote_rules = true;
    config.blacklist_terms = {"dose report"};
    config.composition_rules.push_back({{"CT_THORAX", "CT_ABDOMEN"}, "CT_THORAX_ABDOMEN"});

    auto out = apply_vote_rules(make_set({make_vote("CT_THORAX", 1, "se1"),
                                          make_vote("CT_THORAX", 1, "se2"),
                                          make_vote("CT_ABDOMEN", 1, "se3")}),
                                study, config, db);
    // the blacklisted vote is gone, nothing was rewritten
    REQUIRE(out.votes.size() == 2);
    for (const auto& v : out.votes)
        CHECK((v.class_id == "CT_THORAX" || v.class_id == "CT_ABDOMEN"));
}

TEST_CASE("rules never increase the vote count; composition preserves weight") {
    auto db = ct_db();
    auto study = ct_study();
    engine_config config;
    config.blacklist_terms = {"screenshot"};
    config.composition_rules.push_back({{"CT_THORAX", "CT_ABDOMEN"}, "CT_THORAX_ABDOMEN"});

    std::mt19937 rng(17);
    std::uniform_real_distribution<double> weight(0.01, 1.0);
    const char* classes[] = {"CT_THORAX", "CT_ABDOMEN", "CT_SKULL"};
    const char* uids[] = {"se1", "se2", "se3"};
    for (int round = 0; round < 100; ++round) {
        std::vector<vote> votes;
        int n = static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i)
            votes.push_back(make_vote(classes[rng() % 3], weight(rng), uids[rng() % 3]));
        auto out = apply_vote_rules(make_set(votes), study, config, db);
        CHECK(out.votes.size() <= votes.size());
        // composition-only config preserves total weight
        engine_config compose_only = config;
        compose_only.blacklist_terms.clear();
        compose_only.modality_mismatch_disallow = false;
        auto rewritten = apply_vote_rules(make_set(votes), study, compose_only, db);
        double before = 0;
        double after = 0;
        for (const auto& v : votes) before += v.weight;
        for (const auto& v : rewritten.votes) after += v.weight;
        CHECK(after == doctest::Approx(before).epsilon(1e-12));
        CHECK(rewritten.votes.size() == votes.size());
    }
}

TEST_CASE("with minimal_vote_rules output classes are a subset of input classes") {
    auto db = ct_db();
    auto study = ct_study();
    engine_config config;
    config.minimal_vote_rules = true;
    config.composition_rules.push_back({{"CT_THORAX", "CT_ABDOMEN"}, "CT_THORAX_ABDOMEN"});
    auto out = apply_vote_rules(
        make_set({make_vote("CT_THORAX", 1, "se1"), make_vote("CT_ABDOMEN", 1, "se2")}), study,
        config, db);
    for (const auto& v : out.votes)
        CHECK((v.class_id == "CT_THORAX" || v.class_id == "CT_ABDOMEN"));
}

TEST_CASE("merge_vote_sets concatenates and tags the merged layer") {
    auto merged = merge_vote_sets(make_set({make_vote("A", 1)}),
                                  make_set({make_vote("B", 0.9)}));
    CHECK(merged.layer == layer_kind::merged_meta_network_vote);
    REQUIRE(merged.votes.size() == 2);
    CHECK(tally(merged).winner_class == "A");

    auto empty = merge_vote_sets(make_set({}), make_set({}));
    CHECK(empty.votes.empty());

    auto same = merge_vote_sets(make_set({make_vote("A", 1)}),
                                make_set({make_vote("A", 0.8)}));
    auto outcome = tally(same);
    CHECK(outcome.winner_class == "A");
    CHECK(outcome.winner_total == doctest::Approx(1.8));
}

TEST_CASE("resolve_terminal_tie prefers the largest single vote, then class id") {
    auto votes = make_set({make_vote("A", 0.5), make_vote("A", 0.5), make_vote("B", 0.9),
                           make_vote("B", 0.1)});
    // both total 1.0; B holds the largest single vote
    auto outcome = tally(votes);
    REQUIRE(outcome.kind == tally_kind::tie);
    CHECK(resolve_terminal_tie(votes, outcome.tied_classes) == "B");

    auto level = make_set({make_vote("B", 0.5), make_vote("A", 0.5)});
    auto outcome2 = tally(level);
    REQUIRE(outcome2.kind == tally_kind::tie);
    CHECK(resolve_terminal_tie(level, outcome2.tied_classes) == "A");
}

TEST_CASE("composition rules chain across passes, never within one") {
    std::vector<class_def> defs;
    for (const char* name : {"A A", "B B", "C C", "D D", "E E"}) {
        class_def def;
        def.display_name = name;
        def.modality_token = "CT";
        def.keywords = {std::string("KEYWORD ") + name};
        defs.push_back(def);
    }
    auto db = build_database(std::move(defs));

    study_bundle study;
    study.study_uid = "S";
    study.study_modality = modality::ct;

    engine_config config;
    config.composition_rules.push_back({{"A_A", "B_B"}, "C_C"});
    config.composition_rules.push_back({{"C_C", "D_D"}, "E_E"});

    vote_set votes;
    votes.layer = layer_kind::series_meta_vote;
    votes.votes.push_back({"A_A", 1.0, vote_source::series_meta, std::nullopt});
    votes.votes.push_back({"B_B", 1.0, vote_source::series_meta, std::nullopt});
    votes.votes.push_back({"D_D", 1.0, vote_source::series_meta, std::nullopt});

    // pass 1 rewrites A,B -> C (rule 2 sees the pass-start classes and does
    // not fire); pass 2 rewrites C,D -> E
    auto out = apply_vote_rules(votes, study, config, db);
    REQUIRE(out.votes.size() == 3);
    for (const auto& v : out.votes) CHECK(v.class_id == "E_E");
}

TEST_CASE("each composition rule fires at most once") {
    std::vector<class_def> defs;
    for (const char* name : {"X X", "Y Y", "Z Z", "W W"}) {
        class_def def;
        def.display_name = name;
        def.modality_token = "CT";
        def.keywords = {std::string("KEYWORD ") + name};
        defs.push_back(def);
    }
    auto db = build_database(std::move(defs));

    study_bundle study;
    study.study_uid = "S";
    study.study_modality = modality::ct;

    // the two rules reference each other; the once-per-rule bound stops the
    // rewrite cycle deterministically
    engine_config config;
    config.composition_rules.push_back({{"X_X", "Y_Y"}, "Z_Z"});
    config.composition_rules.push_back({{"Z_Z", "W_W"}, "X_X"});

    vote_set votes;
    votes.layer = layer_kind::series_meta_vote;
    votes.votes.push_back({"X_X", 1.0, vote_source::series_meta, std::nullopt});
    votes.votes.push_back({"Y_Y", 1.0, vote_source::series_meta, std::nullopt});
    votes.votes.push_back({"W_W", 1.0, vote_source::series_meta, std::nullopt});

    auto out = apply_vote_rules(votes, study, config, db);
    REQUIRE(out.votes.size() == 3);
    for (const auto& v : out.votes) CHECK(v.class_id == "X_X");
}
