#ifndef COTRAIN_FEATURIZER_HPP
#define COTRAIN_FEATURIZER_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cotrain {

inline constexpr std::string_view kNumToken = "<num>";

// Lower-cased alphanumeric runs; all-digit runs collapse to kNumToken.
std::vector<std::string> tokenize(std::string_view text);

// Streaming variant of tokenize; the view passed to `fn` is only valid during
// the call. Used on hot paths to avoid per-token allocations.
void for_each_token(std::string_view text, const std::function<void(std::string_view)>& fn);

/// Token index + document frequencies learned from training text only.
/// Indices are dense 0..V-1, ordered by descending df then token.
class Vocabulary {
public:
    Vocabulary() = default;

    static Vocabulary build(std::span<const std::string> texts, std::size_t min_df);

    std::size_t size() const { return tokens_.size(); }           // V
    std::size_t dimension() const { return tokens_.size() + 1; }  // V + bias slot
    std::size_t total_documents() const { return total_documents_; }

    std::optional<std::size_t> lookup(std::string_view token) const;
    const std::string& token(std::size_t index) const { return tokens_[index]; }
    std::size_t df(std::size_t index) const { return df_[index]; }
    double idf(std::size_t index) const; // ln((1+N)/(1+df))

    // Stable digest over tokens, dfs and N; embedded in classifier artifacts
    // so mismatched vocab/params pairs are rejected at load.
    std::uint64_t hash() const;

    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    bool operator==(const Vocabulary& other) const {
        return tokens_ == other.tokens_ && df_ == other.df_ &&
               total_documents_ == other.total_documents_;
    }

private:
    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::vector<std::string> tokens_;
    std::vector<std::size_t> df_;
    std::size_t total_documents_ = 0;
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;

    void rebuild_index();
};

/// Sparse tf-idf vector: strictly increasing indices, no stored zeros, the
/// non-bias block L2-normalized, and a constant bias feature at index V.
struct FeatureVector {
    std::vector<std::pair<std::uint32_t, double>> entries;
    std::uint32_t dimension = 0;
};

FeatureVector featurize(std::string_view text, const Vocabulary& vocab);

} // namespace cotrain

#endif
