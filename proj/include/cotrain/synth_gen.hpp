#ifndef COTRAIN_SYNTH_GEN_HPP
#define COTRAIN_SYNTH_GEN_HPP

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cotrain/corpus.hpp"
#include "cotrain/semisup_engine.hpp"

namespace cotrain {

/// Class-conditional unigram corpus with two conditionally independent views.
/// Each token is class-indicative with probability view_signal (drawn from the
/// class's private vocabulary of that view) and shared noise otherwise.
struct GenConfig {
    LabelSpace space;
    std::vector<double> class_priors;    // sums to 1
    std::size_t vocab_per_class = 40000; // findings-view signal-token universe per class
    // Impression-view universe per class. 0 = auto: vocab_per_class scaled by
    // the views' signal-volume ratio (imp_length_mean * imp_signal) /
    // (fnd_length_mean * fnd_signal), so both views cover their vocabularies
    // at the same rate per training document.
    std::size_t imp_vocab_per_class = 0;
    std::size_t shared_noise_vocab = 150; // noise-token universe per view
    double fnd_length_mean = 219.0;       // Poisson means, floored at 1
    double imp_length_mean = 55.0;
    double fnd_signal = 0.25;
    double imp_signal = 0.35;
    std::size_t n_labeled = 868;
    std::size_t n_unlabeled = 10000;
    std::size_t n_test = 500;
    std::uint64_t seed = 1;

    static GenConfig bt_defaults();
    static GenConfig aggressiveness_defaults();
    static GenConfig defaults_for(const LabelSpace& space);

    std::size_t resolved_imp_vocab() const;
    void validate() const;
};

struct SynthCorpus {
    LabeledDataset labeled;
    UnlabeledDataset pool;
    LabeledDataset test;
    std::map<std::string, Label> hidden_labels; // pool ground truth, evaluation only
};

SynthCorpus generate(const GenConfig& cfg);

// Whether a generated token came from a class's signal vocabulary.
bool is_class_token(std::string_view token);

struct PrecisionResult {
    double value = 1.0;
    bool vacuous = false; // true for the empty selection
};

// Fraction of pseudo-labels matching the hidden ground truth.
PrecisionResult pseudo_label_precision(const PseudoLabeledSet& selected,
                                       const std::map<std::string, Label>& hidden_labels);

} // namespace cotrain

#endif
