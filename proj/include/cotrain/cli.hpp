#ifndef COTRAIN_CLI_HPP
#define COTRAIN_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cotrain/ensemble_eval.hpp"
#include "cotrain/linear_classifier.hpp"
#include "cotrain/synth_gen.hpp"

namespace cotrain::cli {

/// Everything a run needs, resolvable from defaults, a JSON config file and
/// command-line overrides (in that order of precedence).
struct RunConfig {
    std::string task = "bt";
    std::filesystem::path out_dir; // empty -> $COTRAIN_OUT or ./out
    std::uint64_t master_seed = 1; // expanded per fold / setting / round

    // parse
    std::filesystem::path in_dir;
    std::filesystem::path out_file;
    std::filesystem::path aliases_path;

    // corpus inputs
    bool synthetic = false;
    std::filesystem::path labeled_path;
    std::filesystem::path pool_path;
    std::filesystem::path hidden_path;

    // experiment protocol
    std::vector<std::string> settings = {"all"};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    int folds = 5;
    double top_k_percent = 0.0; // 0 -> task default (bt: 50, aggressiveness: 25)
    int max_rounds = 5;
    bool warm_start = false;
    std::size_t min_df = 2;
    TrainConfig train;

    // generator overrides
    std::size_t n_labeled = 868;
    std::size_t n_unlabeled = 10000;
    std::size_t n_test = 500;
    std::size_t vocab_per_class = 40000;
    std::size_t imp_vocab_per_class = 0; // 0 = auto-scale from vocab_per_class
    std::size_t shared_noise_vocab = 150;
    double fnd_signal = 0.25;
    double imp_signal = 0.35;
    double fnd_length_mean = 219.0;
    double imp_length_mean = 55.0;

    // sweep
    std::string axis; // "top_k" | "pool_size"
    std::vector<double> values;
};

// Overlays values from a JSON object file; unknown keys are an error.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

std::filesystem::path resolve_out_dir(const RunConfig& cfg);
double resolve_top_k(const RunConfig& cfg);
std::vector<std::string> resolve_settings(const RunConfig& cfg);
GenConfig resolve_gen_config(const RunConfig& cfg);
ExperimentPlan resolve_plan(const RunConfig& cfg);

// Subcommand entry points; return the process exit status (0 = all requested
// outputs written).
int cmd_parse(const RunConfig& cfg);
int cmd_generate(const RunConfig& cfg);
int cmd_experiment(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

} // namespace cotrain::cli

#endif
