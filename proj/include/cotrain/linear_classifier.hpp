#ifndef COTRAIN_LINEAR_CLASSIFIER_HPP
#define COTRAIN_LINEAR_CLASSIFIER_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "cotrain/corpus.hpp"
#include "cotrain/featurizer.hpp"

namespace cotrain {

/// Weights of a K-way softmax linear classifier. The bias lives in the last
/// feature column (the featurizer's always-on bias feature), so weights and
/// bias occupy one K x dim matrix.
class ClassifierParams {
public:
    ClassifierParams() = default;
    ClassifierParams(LabelSpace space, std::size_t dim, std::uint64_t vocab_hash);

    int num_classes() const { return space_.k; }
    std::size_t dim() const { return dim_; }
    const LabelSpace& space() const { return space_; }
    std::uint64_t vocab_hash() const { return vocab_hash_; }

    std::span<const double> row(int cls) const {
        return {weights_.data() + static_cast<std::size_t>(cls) * dim_, dim_};
    }
    std::span<double> row(int cls) {
        return {weights_.data() + static_cast<std::size_t>(cls) * dim_, dim_};
    }
    const std::vector<double>& weights() const { return weights_; }
    std::vector<double>& weights() { return weights_; }

    bool operator==(const ClassifierParams& other) const {
        return space_ == other.space_ && dim_ == other.dim_ && weights_ == other.weights_;
    }

private:
    LabelSpace space_;
    std::size_t dim_ = 0;
    std::uint64_t vocab_hash_ = 0;
    std::vector<double> weights_; // row-major K x dim
};

struct TrainConfig {
    double learning_rate = 2.0;
    double l2_penalty = 1e-4;
    int max_epochs = 50;
    int batch_size = 16; // clipped to the dataset size
    int patience = 5;    // early-stopping epochs without validation improvement
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainExample {
    FeatureVector x;
    Label y;
};

// softmax(W x); entries sum to 1 within 1e-9.
std::vector<double> predict_dist(const ClassifierParams& params, const FeatureVector& x);

// Argmax with lowest-index tie-break; confidence is the winning probability.
std::pair<Label, double> predict_label(const ClassifierParams& params, const FeatureVector& x);

struct LossGrad {
    double loss;               // mean NLL over the batch + (l2/2)·||W||²
    std::vector<double> grad;  // row-major K x dim
};

LossGrad loss_and_grad(const ClassifierParams& params, std::span<const TrainExample> batch,
                       double l2_penalty);

struct EpochStats {
    int epoch;             // 0 = state before any update
    double train_loss;     // full-data objective at the end of the epoch
    double valid_accuracy; // NaN when no validation set was given
};

struct TrainResult {
    ClassifierParams params; // snapshot with the best validation accuracy
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

// Mini-batch gradient descent on mean NLL + L2, deterministic under cfg.seed.
// Returns the epoch snapshot with the best validation accuracy (ties favor the
// earlier epoch); with an empty validation set, returns the final epoch.
TrainResult train(std::span<const TrainExample> data, std::span<const TrainExample> valid,
                  const TrainConfig& cfg, const LabelSpace& space,
                  const ClassifierParams* init = nullptr);

// JSON artifact with the vocabulary hash embedded; load rejects params saved
// against a different vocabulary.
void save_params(const ClassifierParams& params, const std::filesystem::path& path);
ClassifierParams load_params(const std::filesystem::path& path, const Vocabulary& vocab);

} // namespace cotrain

#endif
