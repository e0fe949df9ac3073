#include "cotrain/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "cotrain/rng.hpp"
#include "json.hpp"

namespace cotrain {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

} // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_heading(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    for (char c : name) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
}

LabelSpace LabelSpace::bt() {
    return LabelSpace{"BT", 2, {"absent", "present"}};
}

LabelSpace LabelSpace::aggressiveness() {
    return LabelSpace{"Aggressiveness", 3, {"non_aggressive", "aggressive", "possibly_aggressive"}};
}

LabelSpace LabelSpace::by_name(std::string_view task) {
    if (iequals(task, "bt")) return bt();
    if (iequals(task, "aggressiveness") || iequals(task, "aggr")) return aggressiveness();
    throw ConfigError("unknown task '" + std::string(task) + "' (expected bt or aggressiveness)");
}

void LabelSpace::validate() const {
    if (k < 2) throw ConfigError("LabelSpace '" + task_name + "': k must be >= 2");
    if (static_cast<int>(class_names.size()) != k)
        throw ConfigError("LabelSpace '" + task_name + "': expected " + std::to_string(k) +
                          " class names, got " + std::to_string(class_names.size()));
}

std::optional<int> LabelSpace::class_index(std::string_view name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        if (iequals(class_names[i], name)) return static_cast<int>(i);
    }
    return std::nullopt;
}

Report::Report(std::string id, std::vector<std::pair<std::string, std::string>> sections)
    : id_(std::move(id)), sections_(std::move(sections)) {
    std::size_t fnd = sections_.size();
    std::size_t imp = sections_.size();
    for (std::size_t i = 0; i < sections_.size(); ++i) {
        if (sections_[i].first == kFindings) fnd = i;
        if (sections_[i].first == kImpression) imp = i;
    }
    if (fnd == sections_.size() || trim(sections_[fnd].second).empty())
        throw DataError("report '" + id_ + "': missing or empty FINDINGS section");
    if (imp == sections_.size() || trim(sections_[imp].second).empty())
        throw DataError("report '" + id_ + "': missing or empty IMPRESSION section");
    fnd_idx_ = fnd;
    imp_idx_ = imp;
}

const std::string* Report::section(std::string_view canonical_name) const {
    for (const auto& [name, text] : sections_) {
        if (name == canonical_name) return &text;
    }
    return nullptr;
}

namespace {

void check_unique_ids(const std::vector<std::string_view>& ids) {
    std::unordered_set<std::string_view> seen;
    for (auto id : ids) {
        if (!seen.insert(id).second)
            throw DataError("duplicate report id '" + std::string(id) + "'");
    }
}

} // namespace

LabeledDataset::LabeledDataset(LabelSpace s, std::vector<std::pair<Report, Label>> it)
    : space(std::move(s)), items(std::move(it)) {
    space.validate();
    std::vector<std::string_view> ids;
    ids.reserve(items.size());
    for (const auto& [r, y] : items) {
        ids.push_back(r.id());
        if (y.value < 0 || y.value >= space.k)
            throw DataError("report '" + r.id() + "': label " + std::to_string(y.value) +
                            " outside 0.." + std::to_string(space.k - 1));
    }
    check_unique_ids(ids);
}

UnlabeledDataset::UnlabeledDataset(std::vector<Report> it) : items(std::move(it)) {
    std::vector<std::string_view> ids;
    ids.reserve(items.size());
    for (const auto& r : items) ids.push_back(r.id());
    check_unique_ids(ids);
}

namespace {

using ojson = nlohmann::ordered_json;

Report report_from_json(const ojson& rec, long line_no) {
    const auto where = [&](const std::string& what) {
        return "line " + std::to_string(line_no) + ": " + what;
    };
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string())
        throw DataError(where("record must be an object with a string 'id'"));
    std::string id = rec["id"].get<std::string>();
    if (!rec.contains("sections") || !rec["sections"].is_object())
        throw DataError(where("record '" + id + "' has no 'sections' object"));

    std::vector<std::pair<std::string, std::string>> sections;
    for (const auto& [key, val] : rec["sections"].items()) {
        if (!val.is_string())
            throw DataError(where("record '" + id + "': section '" + key + "' is not a string"));
        sections.emplace_back(normalize_heading(key), val.get<std::string>());
    }
    try {
        return Report(std::move(id), std::move(sections));
    } catch (const DataError& e) {
        throw DataError(where(e.what()));
    }
}

ojson report_to_json(const Report& r) {
    ojson sections = ojson::object();
    for (const auto& [name, text] : r.sections()) sections[name] = text;
    ojson rec;
    rec["id"] = r.id();
    rec["sections"] = std::move(sections);
    return rec;
}

template <typename Fn>
void for_each_jsonl_record(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ojson rec;
        try {
            rec = ojson::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        fn(rec, line_no);
    }
}

} // namespace

LabeledDataset load_labeled(const std::filesystem::path& path, const LabelSpace& space) {
    space.validate();
    std::vector<std::pair<Report, Label>> items;
    for_each_jsonl_record(path, [&](const ojson& rec, long line_no) {
        Report report = report_from_json(rec, line_no);
        if (!rec.contains("labels") || !rec["labels"].is_object())
            throw DataError("line " + std::to_string(line_no) + ": record '" + report.id() +
                            "' has no 'labels' object");
        const ojson& labels = rec["labels"];
        const ojson* entry = nullptr;
        for (const auto& [key, val] : labels.items()) {
            if (iequals(key, space.task_name)) {
                entry = &val;
                break;
            }
        }
        if (entry == nullptr)
            throw DataError("line " + std::to_string(line_no) + ": record '" + report.id() +
                            "' has no label for task '" + space.task_name + "'");
        if (!entry->is_string())
            throw DataError("line " + std::to_string(line_no) + ": record '" + report.id() +
                            "': label must be a class name string");
        const std::string name = entry->get<std::string>();
        auto idx = space.class_index(name);
        if (!idx)
            throw DataError("line " + std::to_string(line_no) + ": record '" + report.id() +
                            "': unknown class '" + name + "' for task '" + space.task_name + "'");
        items.emplace_back(std::move(report), Label{*idx});
    });
    return LabeledDataset(space, std::move(items));
}

UnlabeledDataset load_unlabeled(const std::filesystem::path& path) {
    std::vector<Report> items;
    for_each_jsonl_record(path, [&](const ojson& rec, long line_no) {
        items.push_back(report_from_json(rec, line_no));
    });
    return UnlabeledDataset(std::move(items));
}

void save_labeled(const LabeledDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& [report, label] : data.items) {
        ojson rec = report_to_json(report);
        rec["labels"] = ojson::object();
        rec["labels"][data.space.task_name] = data.space.class_names.at(label.value);
        out << rec.dump() << '\n';
    }
}

void save_unlabeled(const UnlabeledDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& report : data.items) out << report_to_json(report).dump() << '\n';
}

std::vector<FoldTriple> split_k_folds(const LabeledDataset& data, int folds, std::uint64_t seed) {
    if (folds < 3)
        throw ConfigError("split_k_folds: need at least 3 folds for train/valid/test roles");
    if (data.size() < static_cast<std::size_t>(folds))
        throw ConfigError("split_k_folds: dataset of size " + std::to_string(data.size()) +
                          " cannot fill " + std::to_string(folds) + " folds");

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<std::vector<std::size_t>> fold_members(folds);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        fold_members[pos % folds].push_back(order[pos]);

    auto subset = [&](const std::vector<int>& fold_ids) {
        std::vector<std::pair<Report, Label>> items;
        for (int f : fold_ids)
            for (std::size_t idx : fold_members[f]) items.push_back(data.items[idx]);
        return LabeledDataset(data.space, std::move(items));
    };

    std::vector<FoldTriple> triples;
    triples.reserve(folds);
    for (int i = 0; i < folds; ++i) {
        const int valid_fold = (i + 1) % folds;
        std::vector<int> train_folds;
        for (int f = 0; f < folds; ++f)
            if (f != i && f != valid_fold) train_folds.push_back(f);
        triples.push_back(FoldTriple{subset(train_folds), subset({valid_fold}), subset({i})});
    }
    return triples;
}

std::string concat_views(const Report& r) {
    std::string fnd = r.fnd_text();
    std::string imp = r.imp_text();
    std::size_t fe = fnd.size();
    while (fe > 0 && std::isspace(static_cast<unsigned char>(fnd[fe - 1]))) --fe;
    std::size_t ib = 0;
    while (ib < imp.size() && std::isspace(static_cast<unsigned char>(imp[ib]))) ++ib;
    return fnd.substr(0, fe) + " " + imp.substr(ib);
}

} // namespace cotrain
