#include "cotrain/ensemble_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cotrain/rng.hpp"

namespace cotrain {

std::vector<double> average_dists(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("average_dists: length mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = 0.5 * (a[i] + b[i]);
    return out;
}

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw ContractError("argmax of empty vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

std::pair<Label, std::vector<double>> ensemble_predict(const ViewModel& fnd, const ViewModel& imp,
                                                       const Report& r) {
    if (!(fnd.params.space() == imp.params.space()))
        throw ContractError("ensemble_predict: classifiers trained on different label spaces");
    const auto pf = predict_dist(fnd.params, featurize_report(r, fnd.view, fnd.vocab));
    const auto pi = predict_dist(imp.params, featurize_report(r, imp.view, imp.vocab));
    auto dist = average_dists(pf, pi);
    return {Label{argmax_lowest(dist)}, std::move(dist)};
}

double accuracy(std::span<const Label> preds, std::span<const Label> gold) {
    if (preds.size() != gold.size()) throw ContractError("accuracy: length mismatch");
    if (preds.empty()) throw ContractError("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == gold[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double view_accuracy(const ViewModel& model, const LabeledDataset& data) {
    std::vector<Label> preds;
    std::vector<Label> gold;
    preds.reserve(data.size());
    gold.reserve(data.size());
    for (const auto& [r, y] : data.items) {
        preds.push_back(predict_label(model.params, featurize_report(r, model.view, model.vocab)).first);
        gold.push_back(y);
    }
    return accuracy(preds, gold);
}

double ensemble_accuracy(const ViewModel& fnd, const ViewModel& imp, const LabeledDataset& data) {
    std::vector<Label> preds;
    std::vector<Label> gold;
    preds.reserve(data.size());
    gold.reserve(data.size());
    for (const auto& [r, y] : data.items) {
        preds.push_back(ensemble_predict(fnd, imp, r).first);
        gold.push_back(y);
    }
    return accuracy(preds, gold);
}

const std::vector<std::string>& all_setting_names() {
    static const std::vector<std::string> names = {
        "supervised-concat", "supervised-fnd",  "supervised-imp", "supervised-ensemble",
        "selftrain-concat",  "selftrain-fnd",   "selftrain-imp",  "selftrain-ensemble",
        "cotrain-fnd",       "cotrain-imp",     "cotrain-ensemble",
    };
    return names;
}

bool is_semisup_setting(const std::string& name) {
    return name.rfind("selftrain-", 0) == 0 || name.rfind("cotrain-", 0) == 0;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw ContractError("median of empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean_of(std::span<const double> values) {
    if (values.empty()) throw ContractError("mean of empty list");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double stdev_of(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double mu = mean_of(values);
    double sq = 0.0;
    for (double v : values) sq += (v - mu) * (v - mu);
    return std::sqrt(sq / static_cast<double>(values.size() - 1));
}

nlohmann::ordered_json ExperimentReport::to_json() const {
    nlohmann::ordered_json doc;
    doc["task"] = task;
    doc["seeds"] = seeds;
    doc["config"] = config_snapshot;
    nlohmann::ordered_json settings_json = nlohmann::ordered_json::object();
    for (const auto& [name, stats] : settings) {
        nlohmann::ordered_json s;
        nlohmann::ordered_json runs = nlohmann::ordered_json::array();
        for (const auto& run : stats.runs) {
            runs.push_back({{"fold", run.fold}, {"seed", run.seed}, {"accuracy", run.accuracy}});
        }
        s["runs"] = std::move(runs);
        s["median"] = stats.median;
        s["mean"] = stats.mean;
        s["stdev"] = stats.stdev;
        settings_json[name] = std::move(s);
    }
    doc["settings"] = std::move(settings_json);
    return doc;
}

void ExperimentReport::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
}

std::string ExperimentReport::to_table() const {
    std::ostringstream os;
    os << "task: " << task << "\n";
    std::size_t width = 8;
    for (const auto& [name, stats] : settings) width = std::max(width, name.size());
    os << std::string(width, '-') << "--------------------------------\n";
    char buf[128];
    for (const auto& [name, stats] : settings) {
        std::snprintf(buf, sizeof(buf), "%-*s  %.4f  (%.4f +/- %.3f)  n=%zu\n",
                      static_cast<int>(width), name.c_str(), stats.median, stats.mean, stats.stdev,
                      stats.runs.size());
        os << buf;
    }
    return os.str();
}

void ExperimentPlan::validate() const {
    cotrain.validate();
    if (settings.empty()) throw ConfigError("no settings requested");
    const auto& known = all_setting_names();
    for (const auto& s : settings) {
        if (std::find(known.begin(), known.end(), s) == known.end())
            throw ConfigError("unknown setting '" + s + "'");
    }
    if (seeds.empty()) throw ConfigError("seed list must not be empty");
    if (folds < 3) throw ConfigError("folds must be >= 3");
}

namespace {

// Key-derivation roles for per-(fold, seed, step) training seeds.
enum SeedRole : std::uint64_t {
    kRoleFnd = 1,
    kRoleImp = 2,
    kRoleConcat = 3,
    kRoleCotrain = 4,
    kRoleSelftrainFnd = 5,
    kRoleSelftrainImp = 6,
    kRoleSelftrainConcat = 7,
};

struct SupRun {
    ViewModel fnd;
    ViewModel imp;
    ViewModel concat; // trained only when a concat setting is requested
    bool has_concat = false;
    double ens_valid_acc = 0.0;
};

bool wants(const std::vector<std::string>& settings, const std::string& name) {
    return std::find(settings.begin(), settings.end(), name) != settings.end();
}

} // namespace

ExperimentReport run_experiment(const LabeledDataset& data, const UnlabeledDataset& pool,
                                const ExperimentPlan& plan) {
    plan.validate();
    if (!(data.space == plan.cotrain.task))
        throw ContractError("run_experiment: dataset task does not match plan");

    const bool need_concat = wants(plan.settings, "supervised-concat") ||
                             wants(plan.settings, "selftrain-concat");
    const bool need_selftrain_fnd = wants(plan.settings, "selftrain-fnd") ||
                                    wants(plan.settings, "selftrain-ensemble");
    const bool need_selftrain_imp = wants(plan.settings, "selftrain-imp") ||
                                    wants(plan.settings, "selftrain-ensemble");
    const bool need_cotrain = wants(plan.settings, "cotrain-fnd") ||
                              wants(plan.settings, "cotrain-imp") ||
                              wants(plan.settings, "cotrain-ensemble");

    std::map<std::string, std::vector<FoldRun>> runs;
    const auto folds = split_k_folds(data, plan.folds, plan.split_seed);

    for (int fold = 0; fold < static_cast<int>(folds.size()); ++fold) {
        const auto& triple = folds[fold];

        std::vector<SupRun> sup_runs;
        sup_runs.reserve(plan.seeds.size());
        for (std::uint64_t seed : plan.seeds) {
            SupRun run;
            TrainConfig cfg = plan.cotrain.train_cfg;
            cfg.seed = derive_seed(seed, {static_cast<std::uint64_t>(fold), kRoleFnd});
            run.fnd = train_supervised(triple.train, triple.valid, View::fnd, cfg,
                                       plan.cotrain.min_df);
            cfg.seed = derive_seed(seed, {static_cast<std::uint64_t>(fold), kRoleImp});
            run.imp = train_supervised(triple.train, triple.valid, View::imp, cfg,
                                       plan.cotrain.min_df);
            if (need_concat) {
                cfg.seed = derive_seed(seed, {static_cast<std::uint64_t>(fold), kRoleConcat});
                run.concat = train_supervised(triple.train, triple.valid, View::concat, cfg,
                                              plan.cotrain.min_df);
                run.has_concat = true;
            }
            run.ens_valid_acc = ensemble_accuracy(run.fnd, run.imp, triple.valid);
            sup_runs.push_back(std::move(run));
        }

        for (std::size_t si = 0; si < plan.seeds.size(); ++si) {
            const std::uint64_t seed = plan.seeds[si];
            const SupRun& run = sup_runs[si];
            if (wants(plan.settings, "supervised-fnd"))
                runs["supervised-fnd"].push_back({fold, seed, view_accuracy(run.fnd, triple.test)});
            if (wants(plan.settings, "supervised-imp"))
                runs["supervised-imp"].push_back({fold, seed, view_accuracy(run.imp, triple.test)});
            if (wants(plan.settings, "supervised-concat"))
                runs["supervised-concat"].push_back(
                    {fold, seed, view_accuracy(run.concat, triple.test)});
            if (wants(plan.settings, "supervised-ensemble"))
                runs["supervised-ensemble"].push_back(
                    {fold, seed, ensemble_accuracy(run.fnd, run.imp, triple.test)});
        }

        if (!need_cotrain && !need_selftrain_fnd && !need_selftrain_imp &&
            !wants(plan.settings, "selftrain-concat"))
            continue;

        // Semi-supervised runs start from the supervised run with the median
        // ensemble validation accuracy.
        std::vector<std::size_t> order(sup_runs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (sup_runs[a].ens_valid_acc != sup_runs[b].ens_valid_acc)
                return sup_runs[a].ens_valid_acc < sup_runs[b].ens_valid_acc;
            return plan.seeds[a] < plan.seeds[b];
        });
        const std::size_t mi = order[(order.size() - 1) / 2];
        const std::uint64_t mseed = plan.seeds[mi];
        const SupRun& median_run = sup_runs[mi];

        if (need_cotrain) {
            CotrainConfig cfg = plan.cotrain;
            cfg.train_cfg.seed = derive_seed(mseed, {static_cast<std::uint64_t>(fold), kRoleCotrain});
            const auto res =
                cotrain(triple.train, triple.valid, pool, cfg, &median_run.fnd, &median_run.imp);
            if (wants(plan.settings, "cotrain-fnd"))
                runs["cotrain-fnd"].push_back({fold, mseed, view_accuracy(res.fnd, triple.test)});
            if (wants(plan.settings, "cotrain-imp"))
                runs["cotrain-imp"].push_back({fold, mseed, view_accuracy(res.imp, triple.test)});
            if (wants(plan.settings, "cotrain-ensemble"))
                runs["cotrain-ensemble"].push_back(
                    {fold, mseed, ensemble_accuracy(res.fnd, res.imp, triple.test)});
        }

        ViewModel self_fnd_model;
        ViewModel self_imp_model;
        if (need_selftrain_fnd) {
            CotrainConfig cfg = plan.cotrain;
            cfg.train_cfg.seed =
                derive_seed(mseed, {static_cast<std::uint64_t>(fold), kRoleSelftrainFnd});
            self_fnd_model =
                selftrain(triple.train, triple.valid, pool, View::fnd, cfg, &median_run.fnd).model;
            if (wants(plan.settings, "selftrain-fnd"))
                runs["selftrain-fnd"].push_back(
                    {fold, mseed, view_accuracy(self_fnd_model, triple.test)});
        }
        if (need_selftrain_imp) {
            CotrainConfig cfg = plan.cotrain;
            cfg.train_cfg.seed =
                derive_seed(mseed, {static_cast<std::uint64_t>(fold), kRoleSelftrainImp});
            self_imp_model =
                selftrain(triple.train, triple.valid, pool, View::imp, cfg, &median_run.imp).model;
            if (wants(plan.settings, "selftrain-imp"))
                runs["selftrain-imp"].push_back(
                    {fold, mseed, view_accuracy(self_imp_model, triple.test)});
        }
        if (wants(plan.settings, "selftrain-ensemble"))
            runs["selftrain-ensemble"].push_back(
                {fold, mseed, ensemble_accuracy(self_fnd_model, self_imp_model, triple.test)});
        if (wants(plan.settings, "selftrain-concat")) {
            CotrainConfig cfg = plan.cotrain;
            cfg.train_cfg.seed =
                derive_seed(mseed, {static_cast<std::uint64_t>(fold), kRoleSelftrainConcat});
            const auto res =
                selftrain(triple.train, triple.valid, pool, View::concat, cfg, &median_run.concat);
            runs["selftrain-concat"].push_back(
                {fold, mseed, view_accuracy(res.model, triple.test)});
        }
    }

    ExperimentReport report;
    report.task = data.space.task_name;
    report.seeds = plan.seeds;
    nlohmann::ordered_json snap;
    snap["task"] = plan.cotrain.task.task_name;
    snap["folds"] = plan.folds;
    snap["split_seed"] = plan.split_seed;
    snap["top_k_percent"] = plan.cotrain.top_k_percent;
    snap["max_rounds"] = plan.cotrain.max_rounds;
    snap["warm_start"] = plan.cotrain.warm_start;
    snap["min_df"] = plan.cotrain.min_df;
    snap["learning_rate"] = plan.cotrain.train_cfg.learning_rate;
    snap["l2_penalty"] = plan.cotrain.train_cfg.l2_penalty;
    snap["max_epochs"] = plan.cotrain.train_cfg.max_epochs;
    snap["batch_size"] = plan.cotrain.train_cfg.batch_size;
    snap["patience"] = plan.cotrain.train_cfg.patience;
    snap["settings"] = plan.settings;
    snap["seeds"] = plan.seeds;
    report.config_snapshot = std::move(snap);

    // keep canonical setting order in the report
    for (const auto& name : all_setting_names()) {
        if (!wants(plan.settings, name)) continue;
        SettingStats stats;
        stats.runs = runs[name];
        std::vector<double> accs;
        accs.reserve(stats.runs.size());
        for (const auto& run : stats.runs) accs.push_back(run.accuracy);
        stats.median = median_of(accs);
        stats.mean = mean_of(accs);
        stats.stdev = stdev_of(accs);
        report.settings.emplace_back(name, std::move(stats));
    }
    return report;
}

} // namespace cotrain
