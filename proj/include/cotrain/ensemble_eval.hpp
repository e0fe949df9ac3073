#ifndef COTRAIN_ENSEMBLE_EVAL_HPP
#define COTRAIN_ENSEMBLE_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cotrain/corpus.hpp"
#include "cotrain/semisup_engine.hpp"
#include "json.hpp"

namespace cotrain {

// Elementwise mean of two equal-length probability vectors.
std::vector<double> average_dists(std::span<const double> a, std::span<const double> b);

// Argmax with lowest-index tie-break.
int argmax_lowest(std::span<const double> values);

// Average-probability ensemble over the two views; label-space mismatch is a
// contract error.
std::pair<Label, std::vector<double>> ensemble_predict(const ViewModel& fnd, const ViewModel& imp,
                                                       const Report& r);

double accuracy(std::span<const Label> preds, std::span<const Label> gold);

double view_accuracy(const ViewModel& model, const LabeledDataset& data);
double ensemble_accuracy(const ViewModel& fnd, const ViewModel& imp, const LabeledDataset& data);

// Table-style setting names: supervised-{concat,fnd,imp,ensemble},
// selftrain-{concat,fnd,imp,ensemble}, cotrain-{fnd,imp,ensemble}.
const std::vector<std::string>& all_setting_names();
bool is_semisup_setting(const std::string& name);

struct FoldRun {
    int fold = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
};

struct SettingStats {
    std::vector<FoldRun> runs;
    double median = 0.0;
    double mean = 0.0;
    double stdev = 0.0; // sample standard deviation, 0 for fewer than 2 runs
};

double median_of(std::vector<double> values);
double mean_of(std::span<const double> values);
double stdev_of(std::span<const double> values);

struct ExperimentReport {
    std::string task;
    std::vector<std::pair<std::string, SettingStats>> settings;
    std::vector<std::uint64_t> seeds;
    nlohmann::ordered_json config_snapshot;

    nlohmann::ordered_json to_json() const;
    void save(const std::filesystem::path& path) const;
    std::string to_table() const;
};

struct ExperimentPlan {
    CotrainConfig cotrain;
    std::vector<std::string> settings;
    std::vector<std::uint64_t> seeds; // supervised training seeds
    int folds = 5;
    std::uint64_t split_seed = 17; // fold shuffling

    void validate() const;
};

// Cross-validated protocol: supervised settings run once per (fold, seed);
// semi-supervised settings run once per fold, initialized from the seed whose
// supervised ensemble validation accuracy is the median.
ExperimentReport run_experiment(const LabeledDataset& data, const UnlabeledDataset& pool,
                                const ExperimentPlan& plan);

} // namespace cotrain

#endif
