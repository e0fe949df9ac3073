#include "cotrain/semisup_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "cotrain/ensemble_eval.hpp"
#include "cotrain/rng.hpp"
#include "json.hpp"

namespace cotrain {

std::string_view view_name(View v) {
    switch (v) {
        case View::fnd: return "fnd";
        case View::imp: return "imp";
        case View::concat: return "concat";
    }
    return "?";
}

View view_from_name(std::string_view name) {
    if (name == "fnd") return View::fnd;
    if (name == "imp") return View::imp;
    if (name == "concat") return View::concat;
    throw ConfigError("unknown view '" + std::string(name) + "'");
}

std::string view_text(const Report& r, View v) {
    switch (v) {
        case View::fnd: return r.fnd_text();
        case View::imp: return r.imp_text();
        case View::concat: return concat_views(r);
    }
    throw ContractError("invalid view");
}

FeatureVector featurize_report(const Report& r, View v, const Vocabulary& vocab) {
    return featurize(view_text(r, v), vocab);
}

std::vector<Prediction> generate_pseudo_labels(const ViewModel& source,
                                               const UnlabeledDataset& pool) {
    std::vector<Prediction> preds;
    preds.reserve(pool.size());
    for (const Report& r : pool.items) {
        const auto [label, confidence] =
            predict_label(source.params, featurize_report(r, source.view, source.vocab));
        preds.push_back({r.id(), label, confidence});
    }
    return preds;
}

namespace {

std::size_t topk_count(double k_percent, std::size_t n) {
    return static_cast<std::size_t>(
        std::ceil(k_percent * static_cast<double>(n) / 100.0));
}

void check_k_percent(double k) {
    if (!(k > 0.0) || k > 100.0) throw ConfigError("top_k_percent must be in (0, 100]");
}

PseudoLabeledSet take_topk(std::vector<Prediction> candidates, View source_view, double k_percent) {
    std::sort(candidates.begin(), candidates.end(), [](const Prediction& a, const Prediction& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.id < b.id;
    });
    candidates.resize(topk_count(k_percent, candidates.size()));
    return PseudoLabeledSet{source_view, std::move(candidates)};
}

} // namespace

PseudoLabeledSet select_agreed_topk(std::span<const Prediction> fnd_preds,
                                    std::span<const Prediction> imp_preds, View source_view,
                                    double k_percent) {
    check_k_percent(k_percent);
    if (source_view != View::fnd && source_view != View::imp)
        throw ContractError("select_agreed_topk: source view must be fnd or imp");
    if (fnd_preds.size() != imp_preds.size())
        throw ContractError("select_agreed_topk: prediction lists differ in size");

    std::unordered_map<std::string_view, const Prediction*> by_id;
    by_id.reserve(imp_preds.size());
    for (const auto& p : imp_preds) {
        if (!by_id.emplace(p.id, &p).second)
            throw ContractError("select_agreed_topk: duplicate id '" + p.id + "'");
    }

    std::vector<Prediction> agreed;
    for (const auto& f : fnd_preds) {
        auto it = by_id.find(f.id);
        if (it == by_id.end())
            throw ContractError("select_agreed_topk: id '" + f.id + "' missing from imp predictions");
        const Prediction& i = *it->second;
        if (f.label == i.label) agreed.push_back(source_view == View::fnd ? f : i);
    }
    return take_topk(std::move(agreed), source_view, k_percent);
}

PseudoLabeledSet select_topk(std::span<const Prediction> preds, View source_view,
                             double k_percent) {
    check_k_percent(k_percent);
    return take_topk(std::vector<Prediction>(preds.begin(), preds.end()), source_view, k_percent);
}

void CotrainConfig::validate() const {
    task.validate();
    check_k_percent(top_k_percent);
    if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
    train_cfg.validate();
}

void write_round_logs(const std::filesystem::path& path, std::span<const RoundLog> logs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& log : logs) {
        nlohmann::ordered_json rec;
        rec["round"] = log.round;
        rec["fnd_valid_acc"] = log.fnd_valid_acc;
        rec["imp_valid_acc"] = log.imp_valid_acc;
        rec["ensemble_valid_acc"] = log.ensemble_valid_acc;
        rec["fnd_selected"] = log.fnd_selected;
        rec["imp_selected"] = log.imp_selected;
        rec["agreement_rate"] = log.agreement_rate;
        if (!log.note.empty()) rec["note"] = log.note;
        out << rec.dump() << '\n';
    }
}

namespace {

void check_disjoint_ids(const LabeledDataset& labeled, const LabeledDataset& valid,
                        const UnlabeledDataset& pool) {
    std::unordered_set<std::string_view> ids;
    auto add = [&](std::string_view id, const char* role) {
        if (!ids.insert(id).second)
            throw ContractError("id '" + std::string(id) + "' appears in more than one dataset (" +
                                role + ")");
    };
    for (const auto& [r, y] : labeled.items) add(r.id(), "labeled");
    for (const auto& [r, y] : valid.items) add(r.id(), "valid");
    for (const auto& r : pool.items) add(r.id(), "pool");
}

std::vector<TrainExample> featurize_examples(
    const std::vector<std::pair<std::string, Label>>& texts, const Vocabulary& vocab) {
    std::vector<TrainExample> out;
    out.reserve(texts.size());
    for (const auto& [text, label] : texts) out.push_back({featurize(text, vocab), label});
    return out;
}

std::vector<std::pair<std::string, Label>> view_texts(const LabeledDataset& data, View v) {
    std::vector<std::pair<std::string, Label>> out;
    out.reserve(data.size());
    for (const auto& [r, y] : data.items) out.emplace_back(view_text(r, v), y);
    return out;
}

// Copies weights of tokens shared between the old and new vocabulary (plus the
// bias column); everything else starts at zero.
ClassifierParams remap_params(const ViewModel& old, const Vocabulary& vocab) {
    ClassifierParams fresh(old.params.space(), vocab.dimension(), vocab.hash());
    const int K = fresh.num_classes();
    for (std::size_t j = 0; j < vocab.size(); ++j) {
        if (auto old_idx = old.vocab.lookup(vocab.token(j))) {
            for (int k = 0; k < K; ++k) fresh.row(k)[j] = old.params.row(k)[*old_idx];
        }
    }
    for (int k = 0; k < K; ++k) fresh.row(k)[vocab.size()] = old.params.row(k)[old.vocab.size()];
    return fresh;
}

ViewModel fit_view(const std::vector<std::pair<std::string, Label>>& texts,
                   const LabeledDataset& valid, View v, const LabelSpace& space,
                   const TrainConfig& cfg, std::size_t min_df, const ViewModel* warm_from) {
    std::vector<std::string> corpus_texts;
    corpus_texts.reserve(texts.size());
    for (const auto& [text, label] : texts) corpus_texts.push_back(text);
    Vocabulary vocab = Vocabulary::build(corpus_texts, min_df);

    const auto train_examples = featurize_examples(texts, vocab);
    const auto valid_examples = featurize_examples(view_texts(valid, v), vocab);

    ClassifierParams init = warm_from ? remap_params(*warm_from, vocab)
                                      : ClassifierParams(space, vocab.dimension(), vocab.hash());
    TrainResult tr = train(train_examples, valid_examples, cfg, space, &init);
    return ViewModel{v, std::move(vocab), std::move(tr.params)};
}

} // namespace

ViewModel train_supervised(const LabeledDataset& train_data, const LabeledDataset& valid, View v,
                           const TrainConfig& cfg, std::size_t min_df) {
    if (train_data.empty()) throw ContractError("train_supervised: empty labeled set");
    return fit_view(view_texts(train_data, v), valid, v, train_data.space, cfg, min_df, nullptr);
}

std::vector<std::pair<std::string, Label>> merge_training_texts(const LabeledDataset& labeled,
                                                                View v,
                                                                const UnlabeledDataset& pool,
                                                                const PseudoLabeledSet& selected) {
    std::unordered_map<std::string_view, const Report*> pool_by_id;
    pool_by_id.reserve(pool.size());
    for (const auto& r : pool.items) pool_by_id.emplace(r.id(), &r);

    auto merged = view_texts(labeled, v); // originals first, labels untouched
    merged.reserve(merged.size() + selected.items.size());
    for (const auto& item : selected.items) {
        auto it = pool_by_id.find(item.id);
        if (it == pool_by_id.end())
            throw ContractError("merge_training_texts: id '" + item.id + "' not in pool");
        merged.emplace_back(view_text(*it->second, v), item.label);
    }
    return merged;
}

CotrainResult cotrain(const LabeledDataset& labeled, const LabeledDataset& valid,
                      const UnlabeledDataset& pool, const CotrainConfig& cfg,
                      const ViewModel* init_fnd, const ViewModel* init_imp) {
    cfg.validate();
    if (labeled.empty()) throw ContractError("cotrain: empty labeled set");
    if (!(labeled.space == cfg.task))
        throw ContractError("cotrain: dataset task does not match configuration");
    check_disjoint_ids(labeled, valid, pool);
    if ((init_fnd == nullptr) != (init_imp == nullptr))
        throw ContractError("cotrain: provide init models for both views or neither");

    CotrainResult res;
    res.fnd = init_fnd ? *init_fnd
                       : train_supervised(labeled, valid, View::fnd, cfg.train_cfg, cfg.min_df);
    res.imp = init_imp ? *init_imp
                       : train_supervised(labeled, valid, View::imp, cfg.train_cfg, cfg.min_df);

    RoundLog round0;
    round0.round = 0;
    round0.fnd_valid_acc = view_accuracy(res.fnd, valid);
    round0.imp_valid_acc = view_accuracy(res.imp, valid);
    round0.ensemble_valid_acc = ensemble_accuracy(res.fnd, res.imp, valid);
    round0.agreement_rate = std::numeric_limits<double>::quiet_NaN();
    if (pool.empty()) round0.note = "empty pool: returning supervised initialization";
    res.logs.push_back(round0);
    res.best_round = 0;

    if (pool.empty()) return res;

    ViewModel fnd = res.fnd;
    ViewModel imp = res.imp;
    double best_ens = round0.ensemble_valid_acc;
    double prev_ens = round0.ensemble_valid_acc;
    const std::uint64_t base_seed = cfg.train_cfg.seed;

    for (int round = 1; round <= cfg.max_rounds; ++round) {
        const auto fnd_preds = generate_pseudo_labels(fnd, pool);
        auto imp_preds = generate_pseudo_labels(imp, pool);

        std::size_t agreeing = 0;
        for (std::size_t i = 0; i < fnd_preds.size(); ++i)
            if (fnd_preds[i].label == imp_preds[i].label) ++agreeing;

        // fnd teaches imp
        PseudoLabeledSet dhat_fnd = select_agreed_topk(fnd_preds, imp_preds, View::fnd,
                                                       cfg.top_k_percent);
        TrainConfig step_cfg = cfg.train_cfg;
        step_cfg.seed = derive_seed(base_seed, {static_cast<std::uint64_t>(round), 1});
        imp = fit_view(merge_training_texts(labeled, View::imp, pool, dhat_fnd), valid, View::imp,
                       cfg.task, step_cfg, cfg.min_df, cfg.warm_start ? &imp : nullptr);

        // roles reverse: the freshly retrained imp teaches fnd
        imp_preds = generate_pseudo_labels(imp, pool);
        PseudoLabeledSet dhat_imp = select_agreed_topk(fnd_preds, imp_preds, View::imp,
                                                       cfg.top_k_percent);
        step_cfg.seed = derive_seed(base_seed, {static_cast<std::uint64_t>(round), 0});
        fnd = fit_view(merge_training_texts(labeled, View::fnd, pool, dhat_imp), valid, View::fnd,
                       cfg.task, step_cfg, cfg.min_df, cfg.warm_start ? &fnd : nullptr);

        RoundLog log;
        log.round = round;
        log.fnd_valid_acc = view_accuracy(fnd, valid);
        log.imp_valid_acc = view_accuracy(imp, valid);
        log.ensemble_valid_acc = ensemble_accuracy(fnd, imp, valid);
        log.fnd_selected = dhat_fnd.items.size();
        log.imp_selected = dhat_imp.items.size();
        log.agreement_rate =
            static_cast<double>(agreeing) / static_cast<double>(pool.size());
        res.logs.push_back(log);
        res.selections.push_back(std::move(dhat_fnd));
        res.selections.push_back(std::move(dhat_imp));

        // ties prefer the later round: at equal validation accuracy the pair
        // trained on more pseudo-labeled data wins
        if (log.ensemble_valid_acc >= best_ens) {
            best_ens = log.ensemble_valid_acc;
            res.fnd = fnd;
            res.imp = imp;
            res.best_round = round;
        }
        if (log.ensemble_valid_acc <= prev_ens) break; // validation peaked
        prev_ens = log.ensemble_valid_acc;
    }
    return res;
}

SelftrainResult selftrain(const LabeledDataset& labeled, const LabeledDataset& valid,
                          const UnlabeledDataset& pool, View v, const CotrainConfig& cfg,
                          const ViewModel* init) {
    cfg.validate();
    if (labeled.empty()) throw ContractError("selftrain: empty labeled set");
    if (!(labeled.space == cfg.task))
        throw ContractError("selftrain: dataset task does not match configuration");
    check_disjoint_ids(labeled, valid, pool);

    SelftrainResult res;
    res.model = init ? *init : train_supervised(labeled, valid, v, cfg.train_cfg, cfg.min_df);

    SelfRoundLog round0;
    round0.round = 0;
    round0.valid_acc = view_accuracy(res.model, valid);
    if (pool.empty()) round0.note = "empty pool: returning supervised initialization";
    res.logs.push_back(round0);
    res.best_round = 0;

    if (pool.empty()) return res;

    ViewModel model = res.model;
    double best_acc = round0.valid_acc;
    double prev_acc = round0.valid_acc;
    const std::uint64_t base_seed = cfg.train_cfg.seed;

    for (int round = 1; round <= cfg.max_rounds; ++round) {
        const auto preds = generate_pseudo_labels(model, pool);
        PseudoLabeledSet selected = select_topk(preds, v, cfg.top_k_percent);

        TrainConfig step_cfg = cfg.train_cfg;
        step_cfg.seed = derive_seed(base_seed, {static_cast<std::uint64_t>(round), 2});
        model = fit_view(merge_training_texts(labeled, v, pool, selected), valid, v, cfg.task,
                         step_cfg, cfg.min_df, cfg.warm_start ? &model : nullptr);

        SelfRoundLog log;
        log.round = round;
        log.valid_acc = view_accuracy(model, valid);
        log.selected = selected.items.size();
        res.logs.push_back(log);

        if (log.valid_acc >= best_acc) {
            best_acc = log.valid_acc;
            res.model = model;
            res.best_round = round;
        }
        if (log.valid_acc <= prev_acc) break;
        prev_acc = log.valid_acc;
    }
    return res;
}

} // namespace cotrain
