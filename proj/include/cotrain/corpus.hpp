#ifndef COTRAIN_CORPUS_HPP
#define COTRAIN_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cotrain/errors.hpp"

namespace cotrain {

inline constexpr std::string_view kFindings = "FINDINGS";
inline constexpr std::string_view kImpression = "IMPRESSION";

std::string trim(std::string_view s);

/// K-way classification task: name, class count, class names (indices 0..k-1).
struct LabelSpace {
    std::string task_name;
    int k = 0;
    std::vector<std::string> class_names;

    static LabelSpace bt();
    static LabelSpace aggressiveness();
    static LabelSpace by_name(std::string_view task); // "bt" | "aggressiveness", case-insensitive

    void validate() const;
    // Case-insensitive class-name lookup.
    std::optional<int> class_index(std::string_view name) const;

    bool operator==(const LabelSpace&) const = default;
};

struct Label {
    int value = 0;
    bool operator==(const Label&) const = default;
};

/// A document split into named sections, with the two views pinned out.
/// Section names are canonical (upper case); order is document order.
class Report {
public:
    Report(std::string id, std::vector<std::pair<std::string, std::string>> sections);

    const std::string& id() const { return id_; }
    const std::vector<std::pair<std::string, std::string>>& sections() const { return sections_; }
    const std::string* section(std::string_view canonical_name) const;

    const std::string& fnd_text() const { return sections_[fnd_idx_].second; }
    const std::string& imp_text() const { return sections_[imp_idx_].second; }

    bool operator==(const Report& other) const {
        return id_ == other.id_ && sections_ == other.sections_;
    }

private:
    std::string id_;
    std::vector<std::pair<std::string, std::string>> sections_;
    std::size_t fnd_idx_ = 0;
    std::size_t imp_idx_ = 0;
};

// Upper-cases ASCII and collapses internal whitespace runs to single spaces.
std::string normalize_heading(std::string_view name);

struct LabeledDataset {
    LabelSpace space;
    std::vector<std::pair<Report, Label>> items;

    LabeledDataset() = default;
    LabeledDataset(LabelSpace space, std::vector<std::pair<Report, Label>> items);

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

struct UnlabeledDataset {
    std::vector<Report> items;

    UnlabeledDataset() = default;
    explicit UnlabeledDataset(std::vector<Report> items);

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

// JSONL corpus files: one object per line with keys `id`, `sections`, and
// (for labeled data) `labels` mapping task name to class name.
LabeledDataset load_labeled(const std::filesystem::path& path, const LabelSpace& space);
UnlabeledDataset load_unlabeled(const std::filesystem::path& path);
void save_labeled(const LabeledDataset& data, const std::filesystem::path& path);
void save_unlabeled(const UnlabeledDataset& data, const std::filesystem::path& path);

struct FoldTriple {
    LabeledDataset train;
    LabeledDataset valid;
    LabeledDataset test;
};

// Shuffles ids with a seeded PRNG and deals round-robin into `folds` folds;
// triple i has test = fold i, valid = fold (i+1) mod folds, train = the rest.
std::vector<FoldTriple> split_k_folds(const LabeledDataset& data, int folds, std::uint64_t seed);

// Findings text, one space, impression text; whitespace at the joint collapses
// into the single separator. No section titles.
std::string concat_views(const Report& r);

} // namespace cotrain

#endif
