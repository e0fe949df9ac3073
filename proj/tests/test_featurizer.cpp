#include <cmath>
#include <filesystem>

#include "cotrain/featurizer.hpp"
#include "cotrain/rng.hpp"
#include "doctest.h"

using namespace cotrain;

namespace {

std::vector<std::string> texts(std::initializer_list<const char*> ts) {
    return {ts.begin(), ts.end()};
}

double non_bias_norm(const FeatureVector& fv) {
    double sq = 0.0;
    for (const auto& [idx, w] : fv.entries)
        if (idx + 1 != fv.dimension) sq += w * w;
    return std::sqrt(sq);
}

} // namespace

TEST_SUITE("featurizer") {

TEST_CASE("tokenize: lowercasing, splits, numeric placeholder") {
    CHECK(tokenize("Mass 2.3 cm, stable.") ==
          std::vector<std::string>{"mass", "<num>", "<num>", "cm", "stable"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("ABC abc") == std::vector<std::string>{"abc", "abc"});
    CHECK(tokenize("t2-weighted") == std::vector<std::string>{"t2", "weighted"});
}

TEST_CASE("build_vocab honors min_df") {
    const auto v2 = Vocabulary::build(texts({"a b", "a c"}), 2);
    CHECK(v2.size() == 1);
    CHECK(v2.lookup("a") == 0);
    CHECK(!v2.lookup("b").has_value());

    const auto v1 = Vocabulary::build(texts({"a b", "a c"}), 1);
    CHECK(v1.size() == 3);
}

TEST_CASE("document frequency counts a token once per document") {
    const auto v = Vocabulary::build(texts({"a a", "a"}), 1);
    REQUIRE(v.lookup("a").has_value());
    CHECK(v.df(*v.lookup("a")) == 2);
    CHECK(v.total_documents() == 2);
}

TEST_CASE("vocab order is df-descending then lexicographic, and rebuildable") {
    const auto v = Vocabulary::build(texts({"b a", "b c a", "b"}), 1);
    // df: b=3, a=2, c=1
    CHECK(v.token(0) == "b");
    CHECK(v.token(1) == "a");
    CHECK(v.token(2) == "c");
    const auto again = Vocabulary::build(texts({"b a", "b c a", "b"}), 1);
    CHECK(v == again);
    CHECK(v.hash() == again.hash());
}

TEST_CASE("featurize: all-OOV text yields the bias-only vector") {
    const auto v = Vocabulary::build(texts({"alpha beta", "alpha gamma"}), 1);
    const auto fv = featurize("unseen words only", v);
    REQUIRE(fv.entries.size() == 1);
    CHECK(fv.entries[0].first == v.size());
    CHECK(fv.entries[0].second == 1.0);
    CHECK(fv.dimension == v.dimension());
}

TEST_CASE("featurize: token present in every document has zero idf") {
    const auto v = Vocabulary::build(texts({"alpha x", "alpha y"}), 1);
    // df(alpha) = N = 2, idf = ln(3/3) = 0, so the weight vanishes
    const auto fv = featurize("alpha alpha", v);
    REQUIRE(fv.entries.size() == 1);
    CHECK(fv.entries[0].first == v.size());
}

TEST_CASE("featurize matches hand-computed tf-idf") {
    // N = 2; banana and cherry appear once each, so idf = ln(3/2)
    const auto v = Vocabulary::build(texts({"banana cherry cherry", "apple"}), 1);
    const auto fv = featurize("banana cherry cherry", v);
    // weights before normalization: banana ln(1.5), cherry 2 ln(1.5)
    // L2 norm = ln(1.5) * sqrt(5) -> banana 1/sqrt(5), cherry 2/sqrt(5)
    REQUIRE(fv.entries.size() == 3); // banana, cherry, bias
    const auto bi = *v.lookup("banana");
    const auto ci = *v.lookup("cherry");
    double banana_w = 0.0;
    double cherry_w = 0.0;
    for (const auto& [idx, w] : fv.entries) {
        if (idx == bi) banana_w = w;
        if (idx == ci) cherry_w = w;
    }
    CHECK(banana_w == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
    CHECK(cherry_w == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("non-bias norm is 0 or 1 and indices strictly increase") {
    Rng rng(7);
    const char* words[] = {"a", "b", "c", "dd", "ee", "ff", "g1", "zz", "q"};
    std::vector<std::string> corpus;
    for (int d = 0; d < 20; ++d) {
        std::string doc;
        const std::size_t len = 1 + rng.next_below(12);
        for (std::size_t t = 0; t < len; ++t) {
            doc += words[rng.next_below(9)];
            doc += ' ';
        }
        corpus.push_back(doc);
    }
    const auto v = Vocabulary::build(corpus, 2);
    for (const auto& doc : corpus) {
        const auto fv = featurize(doc, v);
        const double norm = non_bias_norm(fv);
        CHECK((std::abs(norm) < 1e-12 || std::abs(norm - 1.0) < 1e-12));
        for (std::size_t i = 1; i < fv.entries.size(); ++i)
            CHECK(fv.entries[i - 1].first < fv.entries[i].first);
        CHECK(fv.entries.back().first == v.size());
        for (const auto& [idx, w] : fv.entries) CHECK(w != 0.0);
    }
}

TEST_CASE("vocabulary json round-trip preserves everything") {
    const auto v = Vocabulary::build(texts({"a b c", "a b", "a"}), 1);
    const auto path = std::filesystem::temp_directory_path() / "cotrain_vocab.json";
    v.save(path);
    const auto loaded = Vocabulary::load(path);
    CHECK(loaded == v);
    CHECK(loaded.hash() == v.hash());
    CHECK(loaded.idf(0) == v.idf(0));
}

} // TEST_SUITE
