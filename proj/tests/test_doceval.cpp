#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>
#include <string>
#include <vector>

#include "medpipe/doceval.hpp"
#include "medpipe/error.hpp"
#include "medpipe/judge.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace medpipe;

namespace {

LabTable table_of(const std::vector<std::array<std::string, 4>>& rows) {
    LabTable t;
    for (const auto& r : rows) t.rows.push_back(make_lab_row(r[0], r[1], r[2], r[3]));
    return t;
}

}  // namespace

TEST_CASE("make_lab_row caches canonical fields") {
    const LabRow r = make_lab_row("ＷＢＣ Count", "10.2↑", "3.5～9.5", "10⁹/L");
    CHECK(r.entry_name == "ＷＢＣ Count");
    CHECK(r.c_entry == "wbc count");
    CHECK(r.c_result == "10.2");
    CHECK(r.result_flag == ResultFlag::High);
    CHECK(r.c_reference == "3.5-9.5");
    CHECK(r.c_unit == "10^9/l");
}

TEST_CASE("parse_markdown_table reads the first wide pipe table") {
    const std::string text =
        "Patient report follows.\n"
        "\n"
        "| Entry | Result | Reference | Unit |\n"
        "|---|---|---|---|\n"
        "| WBC | 6.4 | 3.5-9.5 | 10^9/L |\n"
        "| RBC | 4.8 | 4.3-5.8 | 10^12/L |\n"
        "\n"
        "End of report.\n";
    const LabTable t = parse_markdown_table(text);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.warnings.empty());
    CHECK(t.rows[0].entry_name == "WBC");
    CHECK(t.rows[0].c_entry == "wbc");
    CHECK(t.rows[1].result == "4.8");
    CHECK(t.rows[1].unit == "10^12/L");
}

TEST_CASE("parse_markdown_table skips narrow tables") {
    const std::string text =
        "| a | b |\n"
        "| - | - |\n"
        "| 1 | 2 |\n"
        "\n"
        "| E | R | Ref | U |\n"
        "| - | - | - | - |\n"
        "| X | 1 | 2-3 | u |\n";
    const LabTable t = parse_markdown_table(text);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].entry_name == "X");
}

TEST_CASE("parse_markdown_table error and edge handling") {
    SUBCASE("no table at all") {
        try {
            parse_markdown_table("plain prose, nothing tabular");
            FAIL("expected no_table");
        } catch (const Error& e) {
            CHECK(std::string(e.code()) == "no_table");
        }
    }
    SUBCASE("only narrow tables") {
        CHECK_THROWS_AS(parse_markdown_table("| a | b | c |\n| 1 | 2 | 3 |\n"), Error);
    }
    SUBCASE("header only") {
        const LabTable t = parse_markdown_table("| E | R | Ref | U |\n| - | - | - | - |\n");
        CHECK(t.rows.empty());
    }
    SUBCASE("extra columns are dropped with a warning") {
        const LabTable t = parse_markdown_table(
            "| E | R | Ref | U |\n"
            "| - | - | - | - |\n"
            "| A | 1 | 2-3 | u | spill |\n");
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0].unit == "u");
        REQUIRE(t.warnings.size() == 1);
        CHECK(t.warnings[0].find("extra columns") != std::string::npos);
    }
    SUBCASE("short rows are padded") {
        const LabTable t = parse_markdown_table(
            "| E | R | Ref | U |\n"
            "| - | - | - | - |\n"
            "| B | 9 |\n");
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0].reference.empty());
        CHECK(t.rows[0].unit.empty());
    }
    SUBCASE("canonically identical rows collapse") {
        const LabTable t = parse_markdown_table(
            "| E | R | Ref | U |\n"
            "| - | - | - | - |\n"
            "| WBC | 6.4 | 3.5-9.5 | 10^9/L |\n"
            "| wbc | ６.４ | 3.5～9.5 | 10⁹/L |\n");
        CHECK(t.rows.size() == 1);
    }
    SUBCASE("rows without an entry name are dropped") {
        const LabTable t = parse_markdown_table(
            "| E | R | Ref | U |\n"
            "| - | - | - | - |\n"
            "|  | 5 | 1-2 | u |\n"
            "| K | 5 | 1-2 | u |\n");
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0].entry_name == "K");
        REQUIRE(t.warnings.size() == 1);
        CHECK(t.warnings[0].find("empty entry name") != std::string::npos);
    }
}

TEST_CASE("match_entries pairs rows by name") {
    SUBCASE("identical tables match in order") {
        const LabTable a = table_of({{"albumin", "1", "", ""}, {"bilirubin", "2", "", ""}});
        const auto pairs = match_entries(a, a);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0] == MatchedPair{0, 0});
        CHECK(pairs[1] == MatchedPair{1, 1});
    }
    SUBCASE("only the shared name matches") {
        const LabTable pred = table_of({{"albumin", "", "", ""}, {"bilirubin", "", "", ""}});
        const LabTable gold = table_of({{"bilirubin", "", "", ""}, {"creatinine", "", "", ""}});
        const auto pairs = match_entries(pred, gold);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0] == MatchedPair{1, 0});
    }
    SUBCASE("near names pair above the similarity floor") {
        const LabTable pred = table_of({{"hemoglobin conc", "", "", ""}});
        const LabTable gold = table_of({{"hemoglobin conc.", "", "", ""}});
        CHECK(edit_similarity("hemoglobin conc", "hemoglobin conc.") ==
              doctest::Approx(0.9375).epsilon(1e-12));
        const auto pairs = match_entries(pred, gold);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0] == MatchedPair{0, 0});
    }
    SUBCASE("short names below the floor stay apart") {
        const LabTable pred = table_of({{"wbc", "", "", ""}});
        const LabTable gold = table_of({{"rbc", "", "", ""}});
        CHECK(match_entries(pred, gold).empty());
    }
    SUBCASE("an exact name wins over an earlier near name") {
        const LabTable pred = table_of({{"hemoglobin conc", "", "", ""}});
        const LabTable gold =
            table_of({{"hemoglobin conc.", "", "", ""}, {"hemoglobin conc", "", "", ""}});
        const auto pairs = match_entries(pred, gold);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0] == MatchedPair{0, 1});
    }
    SUBCASE("near matches still extend cardinality after exact seeding") {
        const LabTable pred =
            table_of({{"hemoglobin conc", "", "", ""}, {"hemoglobin conc", "", "", ""}});
        const LabTable gold =
            table_of({{"hemoglobin conc.", "", "", ""}, {"hemoglobin conc", "", "", ""}});
        const auto pairs = match_entries(pred, gold);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0] == MatchedPair{0, 1});
        CHECK(pairs[1] == MatchedPair{1, 0});
    }
}

TEST_CASE("match_entries reaches maximum cardinality on random tables") {
    std::mt19937 rng(20240818);
    const std::vector<std::string> bases = {"abcdefgh", "abcdwxyz", "qrstuvwx",
                                            "mnopqrst", "hgfedcba"};
    auto random_name = [&]() {
        std::string s = bases[rng() % bases.size()];
        if (rng() % 2) s[rng() % s.size()] = static_cast<char>('a' + rng() % 26);
        return s;
    };
    for (int trial = 0; trial < 200; ++trial) {
        LabTable pred, gold;
        const std::size_t np = 1 + rng() % 6, ng = 1 + rng() % 6;
        for (std::size_t i = 0; i < np; ++i)
            pred.rows.push_back(make_lab_row(random_name(), "1", "", ""));
        for (std::size_t i = 0; i < ng; ++i)
            gold.rows.push_back(make_lab_row(random_name(), "1", "", ""));

        std::vector<std::vector<int>> adj(np);
        for (std::size_t p = 0; p < np; ++p)
            for (std::size_t g = 0; g < ng; ++g) {
                const auto& a = pred.rows[p].c_entry;
                const auto& b = gold.rows[g].c_entry;
                if (a == b || edit_similarity(a, b) >= kNameMatchThreshold)
                    adj[p].push_back(static_cast<int>(g));
            }
        const int want = oracles::max_matching_exhaustive(adj, static_cast<int>(ng));

        const auto pairs = match_entries(pred, gold);
        CHECK(static_cast<int>(pairs.size()) == want);

        std::vector<char> pu(np, 0), gu(ng, 0);
        int last_pred = -1;
        for (const auto& pr : pairs) {
            CHECK(pr.pred_row > last_pred);  // sorted, so pred rows also unique
            last_pred = pr.pred_row;
            CHECK(!gu[pr.gold_row]);
            pu[pr.pred_row] = gu[pr.gold_row] = 1;
            const bool has_edge =
                std::find(adj[pr.pred_row].begin(), adj[pr.pred_row].end(),
                          pr.gold_row) != adj[pr.pred_row].end();
            CHECK(has_edge);
        }
    }
}

TEST_CASE("prf_from_counts conventions") {
    PRF z = prf_from_counts({0, 0, 0});
    CHECK(z.precision == 0.0);
    CHECK(z.recall == 0.0);
    CHECK(z.f1 == 0.0);

    PRF one = prf_from_counts({2, 0, 0});
    CHECK(one.precision == 1.0);
    CHECK(one.recall == 1.0);
    CHECK(one.f1 == 1.0);

    PRF p0 = prf_from_counts({0, 3, 0});
    CHECK(p0.precision == 0.0);
    CHECK(p0.f1 == 0.0);

    PRF half = prf_from_counts({2, 2, 2});
    CHECK(half.precision == 0.5);
    CHECK(half.recall == 0.5);
    CHECK(half.f1 == 0.5);
}

TEST_CASE("score_full_parse field accounting") {
    SUBCASE("identical documents score 1") {
        const LabTable t = table_of({{"WBC", "6.4", "3.5-9.5", "10^9/L"},
                                     {"RBC", "4.8", "4.3-5.8", "10^12/L"}});
        const DocScore s = score_full_parse(t, t);
        CHECK(s.total.tp == 8);
        CHECK(s.total.fp == 0);
        CHECK(s.total.fn == 0);
        CHECK(s.prf.f1 == 1.0);
        for (const auto& f : lab_field_names()) CHECK(s.per_field.at(f).tp == 2);
    }
    SUBCASE("one wrong field costs one fp and one fn") {
        const LabTable gold = table_of({{"Glucose", "5.0", "3.9-6.1", "mmol/L"}});
        const LabTable pred = table_of({{"Glucose", "5.0", "3.9-6.1", "mg/dL"}});
        const DocScore s = score_full_parse(pred, gold);
        CHECK(s.total.tp == 3);
        CHECK(s.total.fp == 1);
        CHECK(s.total.fn == 1);
        CHECK(s.prf.precision == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(s.prf.recall == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(s.prf.f1 == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(s.per_field.at("unit").fp == 1);
        CHECK(s.per_field.at("unit").fn == 1);
        CHECK(s.per_field.at("result").tp == 1);
    }
    SUBCASE("empty prediction yields zero scores") {
        const LabTable gold = table_of({{"Albumin", "47", "40-55", "g/L"}});
        const DocScore s = score_full_parse(LabTable{}, gold);
        CHECK(s.total.tp == 0);
        CHECK(s.total.fp == 0);
        CHECK(s.total.fn == 4);
        CHECK(s.prf.precision == 0.0);
        CHECK(s.prf.recall == 0.0);
        CHECK(s.prf.f1 == 0.0);
    }
    SUBCASE("unmatched prediction rows are pure false positives") {
        const LabTable pred = table_of({{"Albumin", "47", "40-55", "g/L"}});
        const DocScore s = score_full_parse(pred, LabTable{});
        CHECK(s.total.tp == 0);
        CHECK(s.total.fp == 4);
        CHECK(s.total.fn == 0);
        CHECK(s.prf.f1 == 0.0);
    }
    SUBCASE("slot identities hold on random tables") {
        std::mt19937 rng(20240819);
        const std::vector<std::string> names = {"abcdefgh", "abcdwxyz", "qrstuvwx",
                                                "mnopqrst"};
        const std::vector<std::string> vals = {"1", "2", "3"};
        auto random_table = [&]() {
            LabTable t;
            const std::size_t n = rng() % 5;
            for (std::size_t i = 0; i < n; ++i) {
                std::string name = names[rng() % names.size()];
                if (rng() % 2) name[rng() % name.size()] = static_cast<char>('a' + rng() % 26);
                t.rows.push_back(make_lab_row(name, vals[rng() % vals.size()],
                                              vals[rng() % vals.size()],
                                              vals[rng() % vals.size()]));
            }
            return t;
        };
        for (int trial = 0; trial < 200; ++trial) {
            const LabTable pred = random_table(), gold = random_table();
            const DocScore s = score_full_parse(pred, gold);
            CHECK(s.total.tp + s.total.fn == 4 * static_cast<long long>(gold.rows.size()));
            CHECK(s.total.tp + s.total.fp == 4 * static_cast<long long>(pred.rows.size()));
            for (const auto& f : lab_field_names()) {
                const auto& c = s.per_field.at(f);
                CHECK(c.tp + c.fn == static_cast<long long>(gold.rows.size()));
                CHECK(c.tp + c.fp == static_cast<long long>(pred.rows.size()));
            }
        }
    }
}

TEST_CASE("five document corpus reproduces hand-computed scores") {
    // Document 1: two rows, canonically identical. 8 TP, f1 1.
    const LabTable g1 = table_of({{"WBC", "6.4", "3.5-9.5", "10^9/L"},
                                  {"RBC", "4.8", "4.3-5.8", "10^12/L"}});
    const LabTable p1 = table_of({{"ＷＢＣ", "６.４", "3.5～9.5", "10⁹/L"},
                                  {"rbc", "4.8", "4.3–5.8", "10¹²/L"}});

    // Document 2: near-name match, the name slot itself differs. 3 TP, 1 FP, 1 FN.
    const LabTable g2 = table_of({{"Hemoglobin Conc.", "148", "130-175", "g/L"}});
    const LabTable p2 = table_of({{"Hemoglobin Conc", "148", "130-175", "g/L"}});

    // Document 3: result and unit wrong. 2 TP, 2 FP, 2 FN.
    const LabTable g3 = table_of({{"Glucose", "5.0", "3.9-6.1", "mmol/L"}});
    const LabTable p3 = table_of({{"Glucose", "5.2", "3.9-6.1", "mg/dL"}});

    // Document 4: nothing predicted. 4 FN.
    const LabTable g4 = table_of({{"Albumin", "47", "40-55", "g/L"}});
    const LabTable p4;

    // Document 5: one wrong result, one wrong reference. 6 TP, 2 FP, 2 FN.
    const LabTable g5 = table_of({{"ALT", "28", "9-50", "U/L"}, {"AST", "31", "15-40", "U/L"}});
    const LabTable p5 = table_of({{"ALT", "30", "9-50", "U/L"}, {"AST", "31", "15-41", "U/L"}});

    const std::vector<DocScore> docs = {
        score_full_parse(p1, g1), score_full_parse(p2, g2), score_full_parse(p3, g3),
        score_full_parse(p4, g4), score_full_parse(p5, g5)};

    CHECK(docs[0].prf.f1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(docs[1].prf.f1 == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(docs[2].prf.f1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(docs[3].prf.f1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(docs[4].prf.f1 == doctest::Approx(0.75).epsilon(1e-12));

    const FieldScores agg = aggregate_scores(docs);

    // Pooled slots: tp 8+3+2+0+6 = 19, fp 0+1+2+0+2 = 5, fn 0+1+2+4+2 = 9.
    CHECK(agg.total.tp == 19);
    CHECK(agg.total.fp == 5);
    CHECK(agg.total.fn == 9);
    CHECK(agg.micro.precision == doctest::Approx(19.0 / 24.0).epsilon(1e-9));
    CHECK(agg.micro.recall == doctest::Approx(19.0 / 28.0).epsilon(1e-9));
    CHECK(agg.micro.f1 == doctest::Approx(19.0 / 26.0).epsilon(1e-9));
    CHECK(agg.macro_doc_f1 == doctest::Approx(0.6).epsilon(1e-9));

    CHECK(agg.per_field_counts.at("entry_name").tp == 5);
    CHECK(agg.per_field_counts.at("entry_name").fp == 1);
    CHECK(agg.per_field_counts.at("entry_name").fn == 2);
    CHECK(agg.per_field_counts.at("result").tp == 4);
    CHECK(agg.per_field_counts.at("result").fp == 2);
    CHECK(agg.per_field_counts.at("result").fn == 3);
    CHECK(agg.per_field_counts.at("reference").tp == 5);
    CHECK(agg.per_field_counts.at("unit").tp == 5);
    CHECK(agg.per_field.at("result").precision == doctest::Approx(4.0 / 6.0).epsilon(1e-9));
}

TEST_CASE("aggregate_scores handles empty and singleton inputs") {
    const FieldScores none = aggregate_scores({});
    CHECK(none.micro.f1 == 0.0);
    CHECK(none.macro_doc_f1 == 0.0);

    const LabTable t = table_of({{"WBC", "6.4", "3.5-9.5", "10^9/L"}});
    const FieldScores one = aggregate_scores({score_full_parse(t, t)});
    CHECK(one.micro.f1 == 1.0);
    CHECK(one.macro_doc_f1 == 1.0);
}

TEST_CASE("simple qa scores by canonical equality first") {
    CHECK(score_simple_qa("Positive", "positive") == 1);
    CHECK(score_simple_qa("10⁹/L", "10^9/l") == 1);
    CHECK(score_simple_qa("  yes  ", "yes") == 1);
    CHECK(score_simple_qa("1,234", "1234") == 1);
    CHECK(score_simple_qa("no", "yes") == 0);
}

TEST_CASE("simple qa defers to the judge only on rule failure") {
    const std::string ok_judge = R"(printf '{"score": 1.0}')";
    const std::string low_judge = R"(printf '{"score": 0.4}')";
    const std::string bad_judge = "exit 7";

    CHECK(score_simple_qa("elevated", "high", ok_judge) == 1);
    CHECK(score_simple_qa("elevated", "high", low_judge) == 0);
    // Equal answers never reach the judge, even a broken one.
    CHECK(score_simple_qa("same", "same", bad_judge) == 1);

    try {
        score_simple_qa("elevated", "high", bad_judge);
        FAIL("expected judge_failed");
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "judge_failed");
    }
}

TEST_CASE("judge command receives the payload on stdin") {
    testutil::TempDir dir;
    const auto script = dir.file("judge.sh");
    testutil::write_text(script,
                         "#!/bin/sh\n"
                         "grep -q '\"pred\"' || exit 3\n"
                         "printf '{\"score\": 1.0}'\n");
    const std::string cmd = "sh '" + script.string() + "'";
    CHECK(score_simple_qa("elevated", "high", cmd) == 1);
}

TEST_CASE("invoke_judge validates the judge contract") {
    CHECK(invoke_judge(R"(printf '{"score": 0.25}')", "{}") ==
          doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(invoke_judge("", "{}"), Error);
    CHECK_THROWS_AS(invoke_judge("printf nonsense", "{}"), Error);
    CHECK_THROWS_AS(invoke_judge(R"(printf '{"score": 1.5}')", "{}"), Error);
    CHECK_THROWS_AS(invoke_judge(R"(printf '{"grade": 1.0}')", "{}"), Error);
    CHECK_THROWS_AS(invoke_judge("exit 7", "{}"), Error);
}

TEST_CASE("complex qa compares three canonical slots") {
    SUBCASE("markers and width folds do not break equality") {
        const ComplexItem pred = {"10.2↑", "3.5～9.5", "High"};
        const ComplexItem gold = {"10.2", "3.5-9.5", "HIGH"};
        const DocScore s = score_complex_qa(pred, gold);
        CHECK(s.total.tp == 3);
        CHECK(s.total.fp == 0);
        CHECK(s.prf.f1 == 1.0);
    }
    SUBCASE("one wrong slot") {
        const ComplexItem pred = {"5.2", "3.9-6.1", "Normal"};
        const ComplexItem gold = {"5.0", "3.9-6.1", "Normal"};
        const DocScore s = score_complex_qa(pred, gold);
        CHECK(s.total.tp == 2);
        CHECK(s.total.fp == 1);
        CHECK(s.total.fn == 1);
        CHECK(s.prf.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(s.per_field.at("result").fp == 1);
        CHECK(s.per_field.at("reference").tp == 1);
        CHECK(s.per_field.at("abnormal").tp == 1);
    }
    SUBCASE("unrecognized abnormality labels compare as unknown") {
        const ComplexItem pred = {"1", "1-2", "?"};
        const ComplexItem gold = {"1", "1-2", "n/a"};
        CHECK(score_complex_qa(pred, gold).per_field.at("abnormal").tp == 1);
    }
    SUBCASE("everything wrong") {
        const ComplexItem pred = {"9", "8-9", "High"};
        const ComplexItem gold = {"1", "1-2", "Low"};
        const DocScore s = score_complex_qa(pred, gold);
        CHECK(s.total.tp == 0);
        CHECK(s.total.fp == 3);
        CHECK(s.total.fn == 3);
        CHECK(s.prf.f1 == 0.0);
    }
}

TEST_CASE("consensus buckets") {
    CHECK(consensus_bucket(true, true) == ConsensusBucket::Easy);
    CHECK(consensus_bucket(true, false) == ConsensusBucket::Easy);
    CHECK(consensus_bucket(false, true) == ConsensusBucket::Hard);
    CHECK(consensus_bucket(false, false) == ConsensusBucket::Discard);
    CHECK(std::string(to_string(ConsensusBucket::Easy)) == "Easy");
    CHECK(std::string(to_string(ConsensusBucket::Hard)) == "Hard");
    CHECK(std::string(to_string(ConsensusBucket::Discard)) == "Discard");
}
