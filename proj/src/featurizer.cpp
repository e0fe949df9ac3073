#include "cotrain/featurizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "cotrain/errors.hpp"
#include "json.hpp"

namespace cotrain {

namespace {

inline bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }
inline bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

} // namespace

void for_each_token(std::string_view text, const std::function<void(std::string_view)>& fn) {
    std::string scratch;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_alnum(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t begin = i;
        bool all_digits = true;
        scratch.clear();
        while (i < text.size() && is_alnum(static_cast<unsigned char>(text[i]))) {
            unsigned char c = static_cast<unsigned char>(text[i]);
            all_digits = all_digits && is_digit(c);
            scratch.push_back(static_cast<char>(std::tolower(c)));
            ++i;
        }
        if (i == begin) break;
        fn(all_digits ? kNumToken : std::string_view(scratch));
    }
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for_each_token(text, [&](std::string_view tok) { out.emplace_back(tok); });
    return out;
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t min_df) {
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> df;
    std::vector<std::string_view> doc_tokens;
    for (const auto& text : texts) {
        doc_tokens.clear();
        for_each_token(text, [&](std::string_view tok) {
            // df counts each token once per document
            auto it = df.find(tok);
            if (it == df.end()) {
                auto [ins, _] = df.emplace(std::string(tok), 0);
                it = ins;
            }
            doc_tokens.push_back(it->first);
        });
        std::sort(doc_tokens.begin(), doc_tokens.end());
        doc_tokens.erase(std::unique(doc_tokens.begin(), doc_tokens.end()), doc_tokens.end());
        for (auto tok : doc_tokens) df.find(tok)->second += 1;
    }

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [tok, count] : df) {
        if (count >= min_df) kept.emplace_back(tok, count);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.total_documents_ = texts.size();
    vocab.tokens_.reserve(kept.size());
    vocab.df_.reserve(kept.size());
    for (auto& [tok, count] : kept) {
        vocab.tokens_.push_back(std::move(tok));
        vocab.df_.push_back(count);
    }
    vocab.rebuild_index();
    return vocab;
}

void Vocabulary::rebuild_index() {
    index_.clear();
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

std::optional<std::size_t> Vocabulary::lookup(std::string_view token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double Vocabulary::idf(std::size_t index) const {
    return std::log((1.0 + static_cast<double>(total_documents_)) /
                    (1.0 + static_cast<double>(df_[index])));
}

std::uint64_t Vocabulary::hash() const {
    // FNV-1a over tokens, dfs and N
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_byte = [&](unsigned char b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    auto mix_u64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(v >> (8 * i)));
    };
    mix_u64(total_documents_);
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        for (char c : tokens_[i]) mix_byte(static_cast<unsigned char>(c));
        mix_byte(0);
        mix_u64(df_[i]);
    }
    return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    nlohmann::ordered_json doc;
    doc["total_documents"] = total_documents_;
    doc["tokens"] = tokens_;
    doc["df"] = df_;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << doc.dump() << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("vocabulary file '" + path.string() + "': " + e.what());
    }
    Vocabulary vocab;
    vocab.total_documents_ = doc.at("total_documents").get<std::size_t>();
    vocab.tokens_ = doc.at("tokens").get<std::vector<std::string>>();
    vocab.df_ = doc.at("df").get<std::vector<std::size_t>>();
    if (vocab.tokens_.size() != vocab.df_.size())
        throw DataError("vocabulary file '" + path.string() + "': tokens/df length mismatch");
    vocab.rebuild_index();
    return vocab;
}

FeatureVector featurize(std::string_view text, const Vocabulary& vocab) {
    // term frequencies of in-vocab tokens
    std::vector<std::uint32_t> hits;
    for_each_token(text, [&](std::string_view tok) {
        if (auto idx = vocab.lookup(tok)) hits.push_back(static_cast<std::uint32_t>(*idx));
    });
    std::sort(hits.begin(), hits.end());

    FeatureVector fv;
    fv.dimension = static_cast<std::uint32_t>(vocab.dimension());
    fv.entries.reserve(16);

    double sq_norm = 0.0;
    std::size_t i = 0;
    while (i < hits.size()) {
        std::size_t j = i;
        while (j < hits.size() && hits[j] == hits[i]) ++j;
        const double tf = static_cast<double>(j - i);
        const double w = tf * vocab.idf(hits[i]);
        if (w > 0.0) {
            fv.entries.emplace_back(hits[i], w);
            sq_norm += w * w;
        }
        i = j;
    }
    if (sq_norm > 0.0) {
        const double inv = 1.0 / std::sqrt(sq_norm);
        for (auto& [idx, w] : fv.entries) w *= inv;
    }
    fv.entries.emplace_back(static_cast<std::uint32_t>(vocab.size()), 1.0); // bias feature
    return fv;
}

} // namespace cotrain
