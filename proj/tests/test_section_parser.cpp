#include <filesystem>
#include <fstream>
#include <string>

#include "cotrain/rng.hpp"
#include "cotrain/section_parser.hpp"
#include "doctest.h"

using namespace cotrain;

TEST_SUITE("section_parser") {

TEST_CASE("four canonical headings in order") {
    const std::string raw =
        "HISTORY:\nSeizures.\n\n"
        "TECHNIQUE:\nAxial imaging.\n\n"
        "FINDINGS:\nNo acute process.\n\n"
        "IMPRESSION:\nNormal study.\n";
    const auto r = parse_report(raw, SectionLayout::standard(), "full");
    REQUIRE(r.sections().size() == 4);
    CHECK(r.sections()[0].first == "HISTORY");
    CHECK(r.sections()[1].first == "TECHNIQUE");
    CHECK(r.fnd_text() == "No acute process.");
    CHECK(r.imp_text() == "Normal study.");
    // history and technique are retained but never used as views
    CHECK(*r.section("HISTORY") == "Seizures.");
}

TEST_CASE("minimal two-section report") {
    const auto r = parse_report("FINDINGS: a\nIMPRESSION: b", SectionLayout::standard(), "min");
    REQUIRE(r.sections().size() == 2);
    CHECK(r.fnd_text() == "a");
    CHECK(r.imp_text() == "b");
}

TEST_CASE("missing FINDINGS is a parse error naming the section and id") {
    try {
        parse_report("IMPRESSION: b", SectionLayout::standard(), "only-imp");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("FINDINGS") != std::string::npos);
        CHECK(msg.find("only-imp") != std::string::npos);
    }
}

TEST_CASE("duplicate canonical heading is rejected") {
    const std::string raw = "FINDINGS: a\nIMPRESSION: b\nConclusion: c\n";
    // CONCLUSION aliases IMPRESSION, so the report has it twice
    CHECK_THROWS_AS(parse_report(raw, SectionLayout::standard(), "dup"), ParseError);
}

TEST_CASE("detect_headings: offsets, line-start rule, case-insensitivity") {
    const auto layout = SectionLayout::standard();

    auto hits = detect_headings("Findings:\nstuff\nImpression:\nmore", layout);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].canonical == "FINDINGS");
    CHECK(hits[0].offset == 0);
    CHECK(hits[1].canonical == "IMPRESSION");
    CHECK(hits[1].offset == 16);
    CHECK(hits[0].offset < hits[1].offset);

    // mid-line words are not headings
    CHECK(detect_headings("findings mentioned in impression", layout).empty());
    // without colon or line break after the name, no heading
    CHECK(detect_headings("FINDINGS are pending", layout).empty());
}

TEST_CASE("headings may end with a line break instead of a colon") {
    const auto r = parse_report("FINDINGS\nstable mass\nIMPRESSION\nstable",
                                SectionLayout::standard(), "nocolon");
    CHECK(r.fnd_text() == "stable mass");
    CHECK(r.imp_text() == "stable");
}

TEST_CASE("aliases resolve to canonical names") {
    const auto layout = SectionLayout::standard();
    const auto hits = detect_headings("Observations:\na\nConclusion:\nb", layout);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].canonical == "FINDINGS");
    CHECK(hits[1].canonical == "IMPRESSION");

    const auto r = parse_report("Clinical History: headaches\nFINDINGS: a\nCONCLUSION: b",
                                layout, "alias");
    CHECK(r.section("HISTORY") != nullptr);
    CHECK(r.imp_text() == "b");
}

TEST_CASE("empty required section bodies are rejected") {
    CHECK_THROWS_AS(parse_report("FINDINGS:\nIMPRESSION: b", SectionLayout::standard(), "e"),
                    ParseError);
}

TEST_CASE("segmentation is lossless") {
    const auto layout = SectionLayout::standard();
    Rng rng(4242);
    const char* bodies[] = {"one two", "x\n\ny", "  spaced  ", "multi\nline\nbody", "z"};
    const char* colons[] = {":", "", ":  "};
    for (int rep = 0; rep < 50; ++rep) {
        std::string raw;
        const bool with_history = rng.bernoulli(0.5);
        if (with_history) raw += "HISTORY" + std::string(colons[rng.next_below(2)]) + "\n" +
                                 bodies[rng.next_below(5)] + "\n";
        raw += "FINDINGS" + std::string(colons[rng.next_below(2)]) + "\n" +
               bodies[rng.next_below(5)] + "\n";
        raw += "IMPRESSION" + std::string(colons[rng.next_below(2)]) + "\n" +
               bodies[rng.next_below(5)] + "\n";

        const auto segments = segment_report(raw, layout);
        REQUIRE(!segments.empty());
        std::string rebuilt = raw.substr(0, segments.front().offset);
        for (const auto& seg : segments) rebuilt += seg.heading + seg.body_raw;
        CHECK(rebuilt == raw);
        for (std::size_t i = 1; i < segments.size(); ++i)
            CHECK(segments[i - 1].offset < segments[i].offset);
    }
}

TEST_CASE("parse_report is deterministic") {
    const std::string raw = "FINDINGS: a b c\nIMPRESSION: d";
    const auto a = parse_report(raw, SectionLayout::standard(), "d1");
    const auto b = parse_report(raw, SectionLayout::standard(), "d1");
    CHECK(a == b);
}

TEST_CASE("to_raw_text round-trips through the parser") {
    const auto r = parse_report("HISTORY: h\nFINDINGS: f body\nIMPRESSION: i body",
                                SectionLayout::standard(), "rt");
    const auto again = parse_report(to_raw_text(r), SectionLayout::standard(), "rt");
    CHECK(again == r);
}

TEST_CASE("alias file extends the standard layout") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "cotrain_aliases.json";
    {
        std::ofstream out(path);
        out << R"({"SUMMARY": "IMPRESSION"})";
    }
    const auto layout = SectionLayout::with_alias_file(path);
    const auto r = parse_report("FINDINGS: a\nSummary: b", layout, "al");
    CHECK(r.imp_text() == "b");
}

} // TEST_SUITE
