#include "cotrain/synth_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cotrain/rng.hpp"
#include "cotrain/section_parser.hpp"

namespace cotrain {

GenConfig GenConfig::bt_defaults() {
    GenConfig cfg;
    cfg.space = LabelSpace::bt();
    cfg.class_priors = {331.0 / 868.0, 537.0 / 868.0};
    return cfg;
}

GenConfig GenConfig::aggressiveness_defaults() {
    GenConfig cfg;
    cfg.space = LabelSpace::aggressiveness();
    cfg.class_priors = {331.0 / 868.0, 344.0 / 868.0, 193.0 / 868.0};
    return cfg;
}

GenConfig GenConfig::defaults_for(const LabelSpace& space) {
    if (space == LabelSpace::bt()) return bt_defaults();
    if (space == LabelSpace::aggressiveness()) return aggressiveness_defaults();
    throw ConfigError("no generator defaults for task '" + space.task_name + "'");
}

std::size_t GenConfig::resolved_imp_vocab() const {
    if (imp_vocab_per_class > 0) return imp_vocab_per_class;
    const double ratio = (imp_length_mean * imp_signal) /
                         std::max(1e-12, fnd_length_mean * fnd_signal);
    const auto scaled = static_cast<std::size_t>(
        std::llround(static_cast<double>(vocab_per_class) * ratio));
    return std::max<std::size_t>(1, scaled);
}

void GenConfig::validate() const {
    space.validate();
    if (static_cast<int>(class_priors.size()) != space.k)
        throw ConfigError("class_priors size must equal the number of classes");
    double sum = 0.0;
    for (double p : class_priors) {
        if (p < 0.0) throw ConfigError("class priors must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("class priors must sum to 1 (got " + std::to_string(sum) + ")");
    if (vocab_per_class == 0) throw ConfigError("vocab_per_class must be positive");
    if (shared_noise_vocab == 0) throw ConfigError("shared_noise_vocab must be positive");
    if (fnd_length_mean < 1.0 || imp_length_mean < 1.0)
        throw ConfigError("length means must be >= 1");
    if (fnd_signal < 0.0 || fnd_signal > 1.0 || imp_signal < 0.0 || imp_signal > 1.0)
        throw ConfigError("view signals must lie in [0, 1]");
}

namespace {

// Token shapes: "<v>sig<class>t<j>" for signal draws, "<v>noise<j>" otherwise,
// with v in {f, i}. Views never share token strings, so even the concat view
// keeps the two channels distinct.
std::string signal_token(char view, int cls, std::uint64_t j) {
    std::string t;
    t.reserve(16);
    t.push_back(view);
    t += "sig";
    t += std::to_string(cls);
    t.push_back('t');
    t += std::to_string(j);
    return t;
}

std::string noise_token(char view, std::uint64_t j) {
    std::string t;
    t.reserve(12);
    t.push_back(view);
    t += "noise";
    t += std::to_string(j);
    return t;
}

void append_view_tokens(std::string& out, Rng& rng, const GenConfig& cfg, char view, int cls,
                        double length_mean, double signal, std::size_t class_vocab) {
    const std::uint64_t len = std::max<std::uint64_t>(1, rng.poisson(length_mean));
    for (std::uint64_t t = 0; t < len; ++t) {
        if (t > 0) out.push_back(' ');
        if (rng.bernoulli(signal))
            out += signal_token(view, cls, rng.next_below(class_vocab));
        else
            out += noise_token(view, rng.next_below(cfg.shared_noise_vocab));
    }
}

Report make_report(Rng& rng, const GenConfig& cfg, const std::string& id, int cls,
                   const SectionLayout& layout) {
    std::string raw;
    raw.reserve(static_cast<std::size_t>((cfg.fnd_length_mean + cfg.imp_length_mean) * 12));
    raw += "FINDINGS:\n";
    append_view_tokens(raw, rng, cfg, 'f', cls, cfg.fnd_length_mean, cfg.fnd_signal,
                       cfg.vocab_per_class);
    raw += "\n\nIMPRESSION:\n";
    append_view_tokens(raw, rng, cfg, 'i', cls, cfg.imp_length_mean, cfg.imp_signal,
                       cfg.resolved_imp_vocab());
    raw += "\n";
    // round-trips through the parser by construction
    return parse_report(raw, layout, id);
}

} // namespace

SynthCorpus generate(const GenConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, {0x5e9dULL}));
    const SectionLayout layout = SectionLayout::standard();

    std::uint64_t next_id = 0;
    auto fresh_id = [&]() {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "synth-%06llu",
                      static_cast<unsigned long long>(next_id++));
        return std::string(buf);
    };
    auto sample_class = [&]() { return static_cast<int>(rng.categorical(cfg.class_priors)); };

    SynthCorpus corpus;

    std::vector<std::pair<Report, Label>> labeled;
    labeled.reserve(cfg.n_labeled);
    for (std::size_t i = 0; i < cfg.n_labeled; ++i) {
        const int cls = sample_class();
        labeled.emplace_back(make_report(rng, cfg, fresh_id(), cls, layout), Label{cls});
    }
    corpus.labeled = LabeledDataset(cfg.space, std::move(labeled));

    std::vector<Report> pool;
    pool.reserve(cfg.n_unlabeled);
    for (std::size_t i = 0; i < cfg.n_unlabeled; ++i) {
        const int cls = sample_class();
        Report r = make_report(rng, cfg, fresh_id(), cls, layout);
        corpus.hidden_labels.emplace(r.id(), Label{cls});
        pool.push_back(std::move(r));
    }
    corpus.pool = UnlabeledDataset(std::move(pool));

    std::vector<std::pair<Report, Label>> test;
    test.reserve(cfg.n_test);
    for (std::size_t i = 0; i < cfg.n_test; ++i) {
        const int cls = sample_class();
        test.emplace_back(make_report(rng, cfg, fresh_id(), cls, layout), Label{cls});
    }
    corpus.test = LabeledDataset(cfg.space, std::move(test));

    return corpus;
}

bool is_class_token(std::string_view token) {
    return token.size() > 4 && (token[0] == 'f' || token[0] == 'i') &&
           token.substr(1, 3) == "sig";
}

PrecisionResult pseudo_label_precision(const PseudoLabeledSet& selected,
                                       const std::map<std::string, Label>& hidden_labels) {
    if (selected.items.empty()) return {1.0, true};
    std::size_t hits = 0;
    for (const auto& item : selected.items) {
        auto it = hidden_labels.find(item.id);
        if (it == hidden_labels.end())
            throw ContractError("pseudo_label_precision: unknown id '" + item.id + "'");
        if (it->second == item.label) ++hits;
    }
    return {static_cast<double>(hits) / static_cast<double>(selected.items.size()), false};
}

} // namespace cotrain
