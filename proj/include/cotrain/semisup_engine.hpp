#ifndef COTRAIN_SEMISUP_ENGINE_HPP
#define COTRAIN_SEMISUP_ENGINE_HPP

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotrain/corpus.hpp"
#include "cotrain/featurizer.hpp"
#include "cotrain/linear_classifier.hpp"

namespace cotrain {

enum class View { fnd, imp, concat };

std::string_view view_name(View v);
View view_from_name(std::string_view name);

// The text a classifier of the given view consumes; concat joins both sections.
std::string view_text(const Report& r, View v);

/// A trained classifier together with the view it reads and the vocabulary its
/// features are defined over.
struct ViewModel {
    View view = View::fnd;
    Vocabulary vocab;
    ClassifierParams params;
};

FeatureVector featurize_report(const Report& r, View v, const Vocabulary& vocab);

struct Prediction {
    std::string id;
    Label label;
    double confidence = 0.0;
};

// One prediction per pool report, order preserved.
std::vector<Prediction> generate_pseudo_labels(const ViewModel& source, const UnlabeledDataset& pool);

struct PseudoLabeledSet {
    View source_view = View::fnd;
    std::vector<Prediction> items; // confidence-descending, ids ascending on ties
};

// Agreement filter + top-k% selection: keeps the ids on which both views
// predict the same class, then the ceil(k/100 * |agreed|) of them with the
// highest source-view confidence (ties broken by lexicographic id). Labels and
// confidences are taken from the source view.
PseudoLabeledSet select_agreed_topk(std::span<const Prediction> fnd_preds,
                                    std::span<const Prediction> imp_preds, View source_view,
                                    double k_percent);

// Self-training variant: no agreement filter, top-k% of all predictions.
PseudoLabeledSet select_topk(std::span<const Prediction> preds, View source_view, double k_percent);

struct CotrainConfig {
    LabelSpace task;
    double top_k_percent = 50.0; // fraction of the agreed set, in (0, 100]
    int max_rounds = 5;
    TrainConfig train_cfg;
    bool warm_start = false; // retrain from previous-round weights instead of zero
    std::size_t min_df = 2;  // vocabulary cutoff used at every (re)training

    void validate() const;
};

struct RoundLog {
    int round = 0;
    double fnd_valid_acc = 0.0;
    double imp_valid_acc = 0.0;
    double ensemble_valid_acc = 0.0;
    std::size_t fnd_selected = 0; // |D̂| built from the fnd view this round
    std::size_t imp_selected = 0;
    double agreement_rate = 0.0; // fraction of the pool with agreeing predictions
    std::string note;
};

void write_round_logs(const std::filesystem::path& path, std::span<const RoundLog> logs);

// Supervised initialization of one view: vocabulary from the training split's
// view text, zero-initialized maximum-likelihood training.
ViewModel train_supervised(const LabeledDataset& train, const LabeledDataset& valid, View v,
                           const TrainConfig& cfg, std::size_t min_df = 2);

// The (text, label) list a retraining step consumes: every original labeled
// example unchanged, followed by the selected pool reports under their
// pseudo-labels.
std::vector<std::pair<std::string, Label>> merge_training_texts(const LabeledDataset& labeled,
                                                                View v,
                                                                const UnlabeledDataset& pool,
                                                                const PseudoLabeledSet& selected);

struct CotrainResult {
    ViewModel fnd;
    ViewModel imp;
    std::vector<RoundLog> logs;
    std::vector<PseudoLabeledSet> selections; // chronological, two per round
    int best_round = 0;
};

// Alternating co-training. Round 0 is supervised initialization (or the given
// init models); in each later round the fnd view pseudo-labels the pool to
// retrain imp, then the freshly retrained imp pseudo-labels the pool to
// retrain fnd. Stops at max_rounds or when ensemble validation accuracy fails
// to improve over the previous round; returns the round pair with the best
// ensemble validation accuracy.
CotrainResult cotrain(const LabeledDataset& labeled, const LabeledDataset& valid,
                      const UnlabeledDataset& pool, const CotrainConfig& cfg,
                      const ViewModel* init_fnd = nullptr, const ViewModel* init_imp = nullptr);

struct SelfRoundLog {
    int round = 0;
    double valid_acc = 0.0;
    std::size_t selected = 0;
    std::string note;
};

struct SelftrainResult {
    ViewModel model;
    std::vector<SelfRoundLog> logs;
    int best_round = 0;
};

// Single-classifier baseline: the same loop fed by the model's own
// predictions, stopping on its own validation accuracy.
SelftrainResult selftrain(const LabeledDataset& labeled, const LabeledDataset& valid,
                          const UnlabeledDataset& pool, View v, const CotrainConfig& cfg,
                          const ViewModel* init = nullptr);

} // namespace cotrain

#endif
