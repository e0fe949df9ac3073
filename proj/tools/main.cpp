#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cotrain/cli.hpp"

namespace {

using cotrain::cli::RunConfig;

void add_common(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--task", cfg.task, "Classification task: bt or aggressiveness");
    cmd->add_option("--out", cfg.out_dir, "Output directory (default $COTRAIN_OUT or ./out)");
    cmd->add_option("--seed", cfg.master_seed, "Master seed; all randomness derives from it");
}

void add_gen_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--n-labeled", cfg.n_labeled, "Labeled corpus size");
    cmd->add_option("--n-unlabeled", cfg.n_unlabeled, "Unlabeled pool size");
    cmd->add_option("--n-test", cfg.n_test, "Held-out test set size");
    cmd->add_option("--vocab-per-class", cfg.vocab_per_class, "Findings signal-token universe per class");
    cmd->add_option("--imp-vocab-per-class", cfg.imp_vocab_per_class,
                    "Impression universe per class (0 = scale by signal volume)");
    cmd->add_option("--noise-vocab", cfg.shared_noise_vocab, "Noise-token universe per view");
    cmd->add_option("--fnd-signal", cfg.fnd_signal, "Findings signal probability");
    cmd->add_option("--imp-signal", cfg.imp_signal, "Impression signal probability");
    cmd->add_option("--fnd-length", cfg.fnd_length_mean, "Findings mean length in tokens");
    cmd->add_option("--imp-length", cfg.imp_length_mean, "Impression mean length in tokens");
}

void add_train_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--learning-rate", cfg.train.learning_rate, "Gradient-descent step size");
    cmd->add_option("--l2", cfg.train.l2_penalty, "L2 penalty");
    cmd->add_option("--max-epochs", cfg.train.max_epochs, "Epoch cap per training run");
    cmd->add_option("--batch-size", cfg.train.batch_size, "Mini-batch size");
    cmd->add_option("--patience", cfg.train.patience, "Early-stopping patience in epochs");
    cmd->add_option("--top-k", cfg.top_k_percent,
                    "Top-k%% pseudo-label cut (default: 50 for bt, 25 for aggressiveness)");
    cmd->add_option("--max-rounds", cfg.max_rounds, "Co-training round cap");
    cmd->add_flag("--warm-start", cfg.warm_start, "Retrain from previous-round weights");
    cmd->add_option("--min-df", cfg.min_df, "Vocabulary document-frequency cutoff");
}

void add_corpus_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_flag("--synthetic", cfg.synthetic, "Generate the corpus instead of loading files");
    cmd->add_option("--labeled", cfg.labeled_path, "Labeled corpus JSONL");
    cmd->add_option("--pool", cfg.pool_path, "Unlabeled pool JSONL");
    cmd->add_option("--hidden", cfg.hidden_path, "Hidden pool labels JSON (diagnostics only)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-view co-training for sectioned text reports"};
    app.require_subcommand(1);

    RunConfig cfg;

    // a config file seeds the defaults; explicit flags override it
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                cotrain::cli::apply_config_file(cfg, argv[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
        }
    }
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    auto* parse = app.add_subcommand("parse", "Parse raw .txt reports into a JSONL corpus");
    parse->add_option("--in", cfg.in_dir, "Directory of .txt reports")->required();
    parse->add_option("--out-file", cfg.out_file, "Output JSONL path");
    parse->add_option("--aliases", cfg.aliases_path, "Extra heading aliases (JSON object)");
    add_common(parse, cfg);

    auto* gen = app.add_subcommand("generate", "Generate a synthetic two-view corpus");
    add_common(gen, cfg);
    add_gen_options(gen, cfg);

    auto* exp = app.add_subcommand("experiment", "Cross-validated supervised/semi-supervised runs");
    add_common(exp, cfg);
    add_corpus_options(exp, cfg);
    add_gen_options(exp, cfg);
    add_train_options(exp, cfg);
    exp->add_option("--settings", cfg.settings, "Setting names or 'all'")->delimiter(',');
    exp->add_option("--seeds", cfg.seeds, "Supervised training seeds")->delimiter(',');
    exp->add_option("--folds", cfg.folds, "Cross-validation folds");

    auto* sweep = app.add_subcommand("sweep", "Co-training sweeps over top_k or pool_size");
    add_common(sweep, cfg);
    add_corpus_options(sweep, cfg);
    add_gen_options(sweep, cfg);
    add_train_options(sweep, cfg);
    sweep->add_option("--axis", cfg.axis, "Sweep axis: top_k or pool_size")->required();
    sweep->add_option("--values", cfg.values, "Axis values")->delimiter(',')->required();
    sweep->add_option("--folds", cfg.folds, "Folds used to carve the train/valid/test triple");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(parse)) return cotrain::cli::cmd_parse(cfg);
        if (app.got_subcommand(gen)) return cotrain::cli::cmd_generate(cfg);
        if (app.got_subcommand(exp)) return cotrain::cli::cmd_experiment(cfg);
        if (app.got_subcommand(sweep)) return cotrain::cli::cmd_sweep(cfg);
    } catch (const cotrain::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
