#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cotrain/corpus.hpp"
#include "cotrain/rng.hpp"
#include "doctest.h"

using namespace cotrain;
namespace fs = std::filesystem;

namespace {

Report make_report(const std::string& id, const std::string& fnd, const std::string& imp) {
    return Report(id, {{std::string(kFindings), fnd}, {std::string(kImpression), imp}});
}

LabeledDataset make_dataset(std::size_t n, const LabelSpace& space = LabelSpace::bt()) {
    std::vector<std::pair<Report, Label>> items;
    for (std::size_t i = 0; i < n; ++i) {
        items.emplace_back(make_report("r" + std::to_string(i), "f" + std::to_string(i), "i"),
                           Label{static_cast<int>(i % space.k)});
    }
    return LabeledDataset(space, std::move(items));
}

fs::path temp_file(const std::string& name, const std::string& contents) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << contents;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_SUITE("corpus") {

TEST_CASE("label space lookups are case-insensitive") {
    const auto bt = LabelSpace::bt();
    CHECK(bt.k == 2);
    CHECK(bt.class_index("PRESENT") == 1);
    CHECK(bt.class_index("Absent") == 0);
    CHECK(!bt.class_index("maybe").has_value());
    CHECK(LabelSpace::aggressiveness().k == 3);
}

TEST_CASE("report requires both views non-empty") {
    CHECK_THROWS_AS(Report("x", {{std::string(kFindings), "a"}}), DataError);
    CHECK_THROWS_AS(Report("x", {{std::string(kFindings), "a"}, {std::string(kImpression), "  "}}),
                    DataError);
    const auto r = make_report("x", "a", "b");
    CHECK(r.fnd_text() == "a");
    CHECK(r.imp_text() == "b");
}

TEST_CASE("load_labeled keeps order and size") {
    const std::string jsonl =
        R"({"id":"a","sections":{"FINDINGS":"one","IMPRESSION":"x"},"labels":{"BT":"present"}})"
        "\n"
        R"({"id":"b","sections":{"FINDINGS":"two","IMPRESSION":"y"},"labels":{"BT":"absent"}})"
        "\n"
        R"({"id":"c","sections":{"FINDINGS":"three","IMPRESSION":"z"},"labels":{"BT":"PRESENT"}})"
        "\n";
    const auto path = temp_file("cotrain_load3.jsonl", jsonl);
    const auto ds = load_labeled(path, LabelSpace::bt());
    REQUIRE(ds.size() == 3);
    CHECK(ds.items[0].first.id() == "a");
    CHECK(ds.items[1].first.id() == "b");
    CHECK(ds.items[2].second == Label{1});
}

TEST_CASE("load_labeled rejects unknown class naming the id and line") {
    const std::string jsonl =
        R"({"id":"ok","sections":{"FINDINGS":"one","IMPRESSION":"x"},"labels":{"BT":"present"}})"
        "\n"
        R"({"id":"bad","sections":{"FINDINGS":"two","IMPRESSION":"y"},"labels":{"BT":"2"}})"
        "\n";
    const auto path = temp_file("cotrain_badlabel.jsonl", jsonl);
    try {
        load_labeled(path, LabelSpace::bt());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad") != std::string::npos);
        CHECK(msg.find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_labeled rejects records without a label for the task") {
    const std::string jsonl =
        R"({"id":"nolab","sections":{"FINDINGS":"one","IMPRESSION":"x"}})" "\n";
    try {
        load_labeled(temp_file("cotrain_nolabel.jsonl", jsonl), LabelSpace::bt());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("nolab") != std::string::npos);
    }
    const std::string wrong_task =
        R"({"id":"othertask","sections":{"FINDINGS":"one","IMPRESSION":"x"},"labels":{"Aggressiveness":"aggressive"}})"
        "\n";
    CHECK_THROWS_AS(load_labeled(temp_file("cotrain_wrongtask.jsonl", wrong_task),
                                 LabelSpace::bt()),
                    DataError);
}

TEST_CASE("load_labeled: empty file gives empty dataset") {
    const auto path = temp_file("cotrain_empty.jsonl", "");
    const auto ds = load_labeled(path, LabelSpace::bt());
    CHECK(ds.empty());
}

TEST_CASE("load_labeled rejects duplicate ids and missing sections") {
    const std::string dup =
        R"({"id":"a","sections":{"FINDINGS":"one","IMPRESSION":"x"},"labels":{"BT":"present"}})"
        "\n"
        R"({"id":"a","sections":{"FINDINGS":"two","IMPRESSION":"y"},"labels":{"BT":"absent"}})"
        "\n";
    CHECK_THROWS_AS(load_labeled(temp_file("cotrain_dup.jsonl", dup), LabelSpace::bt()), DataError);

    const std::string missing =
        R"({"id":"nofnd","sections":{"IMPRESSION":"x"},"labels":{"BT":"present"}})" "\n";
    try {
        load_labeled(temp_file("cotrain_missing.jsonl", missing), LabelSpace::bt());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("nofnd") != std::string::npos);
    }
}

TEST_CASE("jsonl round-trip is byte-identical after one save") {
    auto ds = make_dataset(5);
    const fs::path p1 = fs::temp_directory_path() / "cotrain_rt1.jsonl";
    const fs::path p2 = fs::temp_directory_path() / "cotrain_rt2.jsonl";
    save_labeled(ds, p1);
    const auto loaded = load_labeled(p1, ds.space);
    save_labeled(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    REQUIRE(loaded.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(loaded.items[i].first == ds.items[i].first);
        CHECK(loaded.items[i].second == ds.items[i].second);
    }
}

TEST_CASE("split_k_folds reproduces the 868/5 fold arithmetic") {
    const auto ds = make_dataset(868);
    const auto triples = split_k_folds(ds, 5, 42);
    REQUIRE(triples.size() == 5);
    std::multiset<std::size_t> test_sizes;
    for (const auto& t : triples) test_sizes.insert(t.test.size());
    CHECK(test_sizes == std::multiset<std::size_t>{173, 173, 174, 174, 174});
    bool found_520 = false;
    for (const auto& t : triples) {
        if (t.test.size() == 174 && t.valid.size() == 174) {
            CHECK(t.train.size() == 520);
            found_520 = true;
        }
    }
    CHECK(found_520);
}

TEST_CASE("split_k_folds small case and determinism") {
    const auto ds = make_dataset(10);
    const auto triples = split_k_folds(ds, 5, 7);
    for (const auto& t : triples) {
        CHECK(t.test.size() == 2);
        CHECK(t.valid.size() == 2);
        CHECK(t.train.size() == 6);
    }
    const auto again = split_k_folds(ds, 5, 7);
    for (std::size_t i = 0; i < triples.size(); ++i) {
        REQUIRE(again[i].test.size() == triples[i].test.size());
        for (std::size_t j = 0; j < triples[i].test.size(); ++j)
            CHECK(again[i].test.items[j].first.id() == triples[i].test.items[j].first.id());
    }
}

TEST_CASE("split_k_folds validates configuration") {
    CHECK_THROWS_AS(split_k_folds(make_dataset(10), 2, 1), ConfigError);
    CHECK_THROWS_AS(split_k_folds(make_dataset(4), 5, 1), ConfigError);
}

TEST_CASE("fold triples partition the dataset") {
    // property over a few random shapes
    Rng rng(99);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 12 + rng.next_below(200);
        const int folds = 3 + static_cast<int>(rng.next_below(4));
        const auto ds = make_dataset(n);
        const auto triples = split_k_folds(ds, folds, rng.next_u64());

        std::set<std::string> all_test_ids;
        std::size_t total_test = 0;
        for (const auto& t : triples) {
            std::set<std::string> ids;
            for (const auto& [r, y] : t.train.items) ids.insert(r.id());
            for (const auto& [r, y] : t.valid.items) ids.insert(r.id());
            for (const auto& [r, y] : t.test.items) ids.insert(r.id());
            CHECK(ids.size() == n); // disjoint and exhaustive within a triple
            for (const auto& [r, y] : t.test.items) all_test_ids.insert(r.id());
            total_test += t.test.size();
        }
        CHECK(all_test_ids.size() == n); // test folds partition the data
        CHECK(total_test == n);
    }
}

TEST_CASE("concat_views joins with a single space") {
    CHECK(concat_views(make_report("x", "A.", "B.")) == "A. B.");
    CHECK(concat_views(make_report("x", "A.  \n", "  B.")) == "A. B.");
}

} // TEST_SUITE
