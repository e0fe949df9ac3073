#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "cotrain/ensemble_eval.hpp"
#include "cotrain/rng.hpp"
#include "cotrain/semisup_engine.hpp"
#include "cotrain/synth_gen.hpp"
#include "doctest.h"

using namespace cotrain;

namespace {

Prediction pred(const std::string& id, int label, double conf) {
    return Prediction{id, Label{label}, conf};
}

// Brute-force reference: filter agreements, order by the stated total order,
// slice the ceil(k/100 * n) prefix. Kept free of any shared selection code.
std::vector<Prediction> oracle_select(const std::vector<Prediction>& fnd,
                                      const std::vector<Prediction>& imp, View source,
                                      double k_percent) {
    std::vector<Prediction> agreed;
    for (const auto& f : fnd) {
        for (const auto& i : imp) {
            if (i.id == f.id) {
                if (f.label == i.label) agreed.push_back(source == View::fnd ? f : i);
                break;
            }
        }
    }
    std::sort(agreed.begin(), agreed.end(), [](const Prediction& a, const Prediction& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.id < b.id;
    });
    const auto take = static_cast<std::size_t>(
        std::ceil(k_percent * static_cast<double>(agreed.size()) / 100.0));
    agreed.resize(take);
    return agreed;
}

struct RandomPreds {
    std::vector<Prediction> fnd;
    std::vector<Prediction> imp;
};

RandomPreds random_preds(Rng& rng, std::size_t max_pool = 100, int num_classes = 3) {
    const std::size_t n = rng.next_below(max_pool + 1);
    RandomPreds out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "u" + std::to_string(i);
        // coarse confidences force plenty of ties
        const double fc = (1.0 + static_cast<double>(rng.next_below(8))) / 8.0;
        const double ic = (1.0 + static_cast<double>(rng.next_below(8))) / 8.0;
        out.fnd.push_back(pred(id, static_cast<int>(rng.next_below(num_classes)), fc));
        out.imp.push_back(pred(id, static_cast<int>(rng.next_below(num_classes)), ic));
    }
    Rng shuffler(rng.next_u64());
    shuffler.shuffle(out.imp); // id order must not matter
    return out;
}

CotrainConfig tiny_cfg(const LabelSpace& space = LabelSpace::bt()) {
    CotrainConfig cfg;
    cfg.task = space;
    cfg.max_rounds = 2;
    cfg.train_cfg.max_epochs = 12;
    cfg.train_cfg.patience = 4;
    cfg.train_cfg.seed = 5;
    return cfg;
}

GenConfig tiny_gen(std::uint64_t seed) {
    GenConfig gen = GenConfig::bt_defaults();
    gen.n_labeled = 120;
    gen.n_unlabeled = 200;
    gen.n_test = 80;
    gen.vocab_per_class = 400;
    gen.shared_noise_vocab = 40;
    gen.fnd_length_mean = 20;
    gen.imp_length_mean = 8;
    gen.seed = seed;
    return gen;
}

} // namespace

TEST_SUITE("semisup_engine") {

TEST_CASE("view_text extracts the right channel") {
    const Report r("x", {{std::string(kFindings), "f text"}, {std::string(kImpression), "i text"}});
    CHECK(view_text(r, View::fnd) == "f text");
    CHECK(view_text(r, View::imp) == "i text");
    CHECK(view_text(r, View::concat) == "f text i text");
}

TEST_CASE("select_agreed_topk: 4 agreed, k=50 keeps the top 2") {
    std::vector<Prediction> fnd = {pred("a", 1, 0.9), pred("b", 1, 0.8), pred("c", 0, 0.7),
                                   pred("d", 0, 0.6)};
    std::vector<Prediction> imp = {pred("a", 1, 0.55), pred("b", 1, 0.6), pred("c", 0, 0.8),
                                   pred("d", 0, 0.9)};
    const auto sel = select_agreed_topk(fnd, imp, View::fnd, 50.0);
    REQUIRE(sel.items.size() == 2);
    CHECK(sel.items[0].id == "a");
    CHECK(sel.items[1].id == "b");
    CHECK(sel.items[0].confidence == 0.9); // source-view confidence
    const auto ref = oracle_select(fnd, imp, View::fnd, 50.0);
    REQUIRE(ref.size() == 2);
    CHECK(ref[0].id == "a");
}

TEST_CASE("select_agreed_topk: zero agreements yield an empty set") {
    std::vector<Prediction> fnd = {pred("a", 1, 0.9), pred("b", 0, 0.8)};
    std::vector<Prediction> imp = {pred("a", 0, 0.9), pred("b", 1, 0.8)};
    const auto sel = select_agreed_topk(fnd, imp, View::fnd, 50.0);
    CHECK(sel.items.empty());
}

TEST_CASE("select_agreed_topk: k=100 keeps every agreed id") {
    std::vector<Prediction> fnd = {pred("a", 1, 0.9), pred("b", 1, 0.8), pred("c", 0, 0.7)};
    std::vector<Prediction> imp = {pred("a", 1, 0.9), pred("b", 0, 0.8), pred("c", 0, 0.7)};
    const auto sel = select_agreed_topk(fnd, imp, View::fnd, 100.0);
    CHECK(sel.items.size() == 2);
}

TEST_CASE("select_agreed_topk: labels and confidences come from the source view") {
    std::vector<Prediction> fnd = {pred("a", 1, 0.9)};
    std::vector<Prediction> imp = {pred("a", 1, 0.52)};
    const auto from_imp = select_agreed_topk(fnd, imp, View::imp, 100.0);
    REQUIRE(from_imp.items.size() == 1);
    CHECK(from_imp.items[0].confidence == 0.52);
    CHECK(from_imp.source_view == View::imp);
}

TEST_CASE("select_agreed_topk rejects mismatched id sets and bad k") {
    std::vector<Prediction> fnd = {pred("a", 1, 0.9)};
    std::vector<Prediction> imp = {pred("b", 1, 0.9)};
    CHECK_THROWS_AS(select_agreed_topk(fnd, imp, View::fnd, 50.0), ContractError);
    std::vector<Prediction> one = {pred("a", 1, 0.9)};
    CHECK_THROWS_AS(select_agreed_topk(one, one, View::concat, 50.0), ContractError);
    CHECK_THROWS_AS(select_agreed_topk(one, one, View::fnd, 0.0), ConfigError);
    CHECK_THROWS_AS(select_agreed_topk(one, one, View::fnd, 101.0), ConfigError);
}

TEST_CASE("selection equals the brute-force oracle on random instances") {
    Rng rng(404);
    const double ks[] = {10.0, 25.0, 33.4, 50.0, 75.0, 100.0};
    for (int rep = 0; rep < 200; ++rep) {
        const auto preds = random_preds(rng);
        const double k = ks[rng.next_below(6)];
        const View source = rng.bernoulli(0.5) ? View::fnd : View::imp;
        const auto got = select_agreed_topk(preds.fnd, preds.imp, source, k);
        const auto want = oracle_select(preds.fnd, preds.imp, source, k);
        REQUIRE(got.items.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got.items[i].id == want[i].id);
            CHECK(got.items[i].label == want[i].label);
            CHECK(got.items[i].confidence == want[i].confidence);
        }
    }
}

TEST_CASE("selection cardinality and monotonicity in k") {
    Rng rng(505);
    for (int rep = 0; rep < 60; ++rep) {
        const auto preds = random_preds(rng);
        const auto all = select_agreed_topk(preds.fnd, preds.imp, View::fnd, 100.0);
        const std::size_t agreed = all.items.size();
        std::set<std::string> previous;
        for (double k : {10.0, 25.0, 50.0, 75.0, 100.0}) {
            const auto sel = select_agreed_topk(preds.fnd, preds.imp, View::fnd, k);
            const auto expect = static_cast<std::size_t>(
                std::ceil(k * static_cast<double>(agreed) / 100.0));
            CHECK(sel.items.size() == expect);
            std::set<std::string> ids;
            for (const auto& item : sel.items) ids.insert(item.id);
            CHECK(std::includes(ids.begin(), ids.end(), previous.begin(), previous.end()));
            previous = std::move(ids);
        }
    }
}

TEST_CASE("select_topk has no agreement filter") {
    std::vector<Prediction> preds = {pred("a", 1, 0.9), pred("b", 0, 0.5), pred("c", 1, 0.7)};
    const auto sel = select_topk(preds, View::concat, 67.0);
    REQUIRE(sel.items.size() == 3 * 67 / 100 + 1); // ceil(2.01)
    CHECK(sel.items[0].id == "a");
    CHECK(sel.items[1].id == "c");
}

TEST_CASE("generate_pseudo_labels composes predict_label over the pool") {
    const auto corpus = generate(tiny_gen(9));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    const auto model = train_supervised(folds[0].train, folds[0].valid, View::fnd,
                                        tiny_cfg().train_cfg);

    UnlabeledDataset one(std::vector<Report>{corpus.pool.items.front()});
    const auto preds = generate_pseudo_labels(model, one);
    REQUIRE(preds.size() == 1);
    const auto direct =
        predict_label(model.params, featurize_report(one.items[0], View::fnd, model.vocab));
    CHECK(preds[0].label == direct.first);
    CHECK(preds[0].confidence == direct.second);
    CHECK(preds[0].id == one.items[0].id());

    CHECK(generate_pseudo_labels(model, UnlabeledDataset{}).empty());

    const auto all = generate_pseudo_labels(model, corpus.pool);
    REQUIRE(all.size() == corpus.pool.size());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].id == corpus.pool.items[i].id());
}

TEST_CASE("merge_training_texts keeps every original example unchanged") {
    const auto corpus = generate(tiny_gen(10));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    const auto& labeled = folds[0].train;

    PseudoLabeledSet sel;
    sel.source_view = View::fnd;
    sel.items = {pred(corpus.pool.items[0].id(), 1, 0.9),
                 pred(corpus.pool.items[5].id(), 0, 0.8)};

    const auto merged = merge_training_texts(labeled, View::imp, corpus.pool, sel);
    REQUIRE(merged.size() == labeled.size() + 2);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        CHECK(merged[i].first == labeled.items[i].first.imp_text());
        CHECK(merged[i].second == labeled.items[i].second);
    }
    CHECK(merged[labeled.size()].second == Label{1});
    CHECK(merged[labeled.size() + 1].first == corpus.pool.items[5].imp_text());

    PseudoLabeledSet bogus;
    bogus.items = {pred("not-in-pool", 0, 0.5)};
    CHECK_THROWS_AS(merge_training_texts(labeled, View::imp, corpus.pool, bogus), ContractError);
}

TEST_CASE("cotrain with an empty pool returns supervised init bitwise") {
    const auto corpus = generate(tiny_gen(11));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    const auto cfg = tiny_cfg();

    const auto res = cotrain::cotrain(folds[0].train, folds[0].valid, UnlabeledDataset{}, cfg);
    const auto sup_fnd =
        train_supervised(folds[0].train, folds[0].valid, View::fnd, cfg.train_cfg, cfg.min_df);
    const auto sup_imp =
        train_supervised(folds[0].train, folds[0].valid, View::imp, cfg.train_cfg, cfg.min_df);

    CHECK(res.fnd.params.weights() == sup_fnd.params.weights());
    CHECK(res.imp.params.weights() == sup_imp.params.weights());
    CHECK(res.best_round == 0);
    REQUIRE(res.logs.size() == 1);
    CHECK(res.logs[0].note.find("empty pool") != std::string::npos);
}

TEST_CASE("cotrain validates inputs") {
    const auto corpus = generate(tiny_gen(12));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    auto cfg = tiny_cfg();
    CHECK_THROWS_AS(cotrain::cotrain(LabeledDataset{LabelSpace::bt(), {}}, folds[0].valid, corpus.pool, cfg),
                    ContractError);
    // overlapping ids between labeled and pool
    UnlabeledDataset overlapping = corpus.pool;
    overlapping.items.push_back(folds[0].train.items[0].first);
    CHECK_THROWS_AS(cotrain::cotrain(folds[0].train, folds[0].valid, overlapping, cfg), ContractError);
    // wrong task
    cfg.task = LabelSpace::aggressiveness();
    CHECK_THROWS_AS(cotrain::cotrain(folds[0].train, folds[0].valid, corpus.pool, cfg), ContractError);
}

TEST_CASE("cotrain logs rounds, selections stay inside the agreed set") {
    const auto corpus = generate(tiny_gen(13));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    const auto cfg = tiny_cfg();
    const auto res = cotrain::cotrain(folds[0].train, folds[0].valid, corpus.pool, cfg);

    REQUIRE(res.logs.size() >= 2);
    CHECK(res.logs[0].round == 0);
    REQUIRE(!res.selections.empty());
    CHECK(res.selections.size() == 2 * (res.logs.size() - 1));

    // round-1 fnd-sourced selection must agree with independently recomputed
    // supervised predictions on both views
    const auto sup_fnd =
        train_supervised(folds[0].train, folds[0].valid, View::fnd, cfg.train_cfg, cfg.min_df);
    const auto sup_imp =
        train_supervised(folds[0].train, folds[0].valid, View::imp, cfg.train_cfg, cfg.min_df);
    const auto fnd_preds = generate_pseudo_labels(sup_fnd, corpus.pool);
    const auto imp_preds = generate_pseudo_labels(sup_imp, corpus.pool);
    std::map<std::string, std::pair<Label, Label>> by_id;
    for (std::size_t i = 0; i < fnd_preds.size(); ++i)
        by_id[fnd_preds[i].id] = {fnd_preds[i].label, imp_preds[i].label};

    const auto& first = res.selections.front();
    CHECK(first.source_view == View::fnd);
    for (const auto& item : first.items) {
        const auto& [fl, il] = by_id.at(item.id);
        CHECK(fl == il);        // agreement filter
        CHECK(item.label == fl); // label from the source view
    }

    // sizes as logged
    CHECK(res.logs[1].fnd_selected == first.items.size());
    for (const auto& log : res.logs) {
        if (log.round == 0) continue;
        CHECK(log.agreement_rate >= 0.0);
        CHECK(log.agreement_rate <= 1.0);
        CHECK(log.fnd_selected <= corpus.pool.size());
    }
}

TEST_CASE("cotrain is deterministic") {
    const auto corpus = generate(tiny_gen(14));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    const auto cfg = tiny_cfg();
    const auto a = cotrain::cotrain(folds[0].train, folds[0].valid, corpus.pool, cfg);
    const auto b = cotrain::cotrain(folds[0].train, folds[0].valid, corpus.pool, cfg);
    CHECK(a.fnd.params.weights() == b.fnd.params.weights());
    CHECK(a.imp.params.weights() == b.imp.params.weights());
    REQUIRE(a.logs.size() == b.logs.size());
    for (std::size_t i = 0; i < a.logs.size(); ++i)
        CHECK(a.logs[i].ensemble_valid_acc == b.logs[i].ensemble_valid_acc);
}

TEST_CASE("warm start runs and stays deterministic across vocab growth") {
    const auto corpus = generate(tiny_gen(15));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    auto cfg = tiny_cfg();
    cfg.warm_start = true;
    const auto a = cotrain::cotrain(folds[0].train, folds[0].valid, corpus.pool, cfg);
    const auto b = cotrain::cotrain(folds[0].train, folds[0].valid, corpus.pool, cfg);
    CHECK(a.fnd.params.weights() == b.fnd.params.weights());
}

TEST_CASE("supervised vocabularies come from the training split alone") {
    const auto corpus = generate(tiny_gen(18));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    const auto cfg = tiny_cfg();
    const auto model =
        train_supervised(folds[0].train, folds[0].valid, View::fnd, cfg.train_cfg, cfg.min_df);
    std::vector<std::string> train_texts;
    for (const auto& [r, y] : folds[0].train.items) train_texts.push_back(r.fnd_text());
    CHECK(model.vocab == Vocabulary::build(train_texts, cfg.min_df));
}

TEST_CASE("selftrain with an empty pool equals supervised training") {
    const auto corpus = generate(tiny_gen(16));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    const auto cfg = tiny_cfg();
    const auto res = selftrain(folds[0].train, folds[0].valid, UnlabeledDataset{}, View::imp, cfg);
    const auto sup =
        train_supervised(folds[0].train, folds[0].valid, View::imp, cfg.train_cfg, cfg.min_df);
    CHECK(res.model.params.weights() == sup.params.weights());
    CHECK(res.logs.size() == 1);
}

TEST_CASE("selftrain on the concat view consumes both sections") {
    const auto corpus = generate(tiny_gen(17));
    const auto folds = split_k_folds(corpus.labeled, 4, 3);
    const auto cfg = tiny_cfg();
    const auto res = selftrain(folds[0].train, folds[0].valid, corpus.pool, View::concat, cfg);
    CHECK(res.model.view == View::concat);
    // concat vocabularies contain impression tokens (prefixed i...) alongside findings tokens
    bool has_imp_token = false;
    bool has_fnd_token = false;
    for (std::size_t i = 0; i < res.model.vocab.size(); ++i) {
        const auto& tok = res.model.vocab.token(i);
        has_imp_token = has_imp_token || tok.starts_with("i");
        has_fnd_token = has_fnd_token || tok.starts_with("f");
    }
    CHECK(has_imp_token);
    CHECK(has_fnd_token);
    for (const auto& log : res.logs) {
        if (log.round > 0) CHECK(log.selected == static_cast<std::size_t>(
            std::ceil(cfg.top_k_percent * corpus.pool.size() / 100.0)));
    }
}

TEST_CASE("round logs serialize as jsonl") {
    std::vector<RoundLog> logs(2);
    logs[0].round = 0;
    logs[1].round = 1;
    logs[1].fnd_selected = 10;
    const auto path = std::filesystem::temp_directory_path() / "cotrain_logs.jsonl";
    write_round_logs(path, logs);
    std::ifstream in(path);
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++count;
    CHECK(count == 2);
}

} // TEST_SUITE
