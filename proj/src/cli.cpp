#include "cotrain/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <iostream>
#include <map>
#include <unistd.h>

#include "cotrain/rng.hpp"
#include "cotrain/section_parser.hpp"
#include "json.hpp"

namespace cotrain::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Seed-derivation roles under the master seed; per-step roles nest below these.
enum MasterRole : std::uint64_t {
    kRoleSplit = 1,
    kRoleGenerate = 2,
    kRoleSupInit = 3,
    kRoleSweepRun = 4,
};

// One run per output directory: holds an exclusively created lockfile for the
// duration of the run.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".cotrain.lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            throw ConfigError("output directory '" + dir.string() +
                              "' is locked by another run (" + path_.string() + " exists)");
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

} // namespace

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path.string() + "': " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");

    for (const auto& [key, val] : doc.items()) {
        try {
            if (key == "task") cfg.task = val.get<std::string>();
            else if (key == "out_dir") cfg.out_dir = val.get<std::string>();
            else if (key == "master_seed") cfg.master_seed = val.get<std::uint64_t>();
            else if (key == "synthetic") cfg.synthetic = val.get<bool>();
            else if (key == "labeled") cfg.labeled_path = val.get<std::string>();
            else if (key == "pool") cfg.pool_path = val.get<std::string>();
            else if (key == "hidden") cfg.hidden_path = val.get<std::string>();
            else if (key == "settings") cfg.settings = val.get<std::vector<std::string>>();
            else if (key == "seeds") cfg.seeds = val.get<std::vector<std::uint64_t>>();
            else if (key == "folds") cfg.folds = val.get<int>();
            else if (key == "top_k_percent") cfg.top_k_percent = val.get<double>();
            else if (key == "max_rounds") cfg.max_rounds = val.get<int>();
            else if (key == "warm_start") cfg.warm_start = val.get<bool>();
            else if (key == "min_df") cfg.min_df = val.get<std::size_t>();
            else if (key == "learning_rate") cfg.train.learning_rate = val.get<double>();
            else if (key == "l2_penalty") cfg.train.l2_penalty = val.get<double>();
            else if (key == "max_epochs") cfg.train.max_epochs = val.get<int>();
            else if (key == "batch_size") cfg.train.batch_size = val.get<int>();
            else if (key == "patience") cfg.train.patience = val.get<int>();
            else if (key == "n_labeled") cfg.n_labeled = val.get<std::size_t>();
            else if (key == "n_unlabeled") cfg.n_unlabeled = val.get<std::size_t>();
            else if (key == "n_test") cfg.n_test = val.get<std::size_t>();
            else if (key == "vocab_per_class") cfg.vocab_per_class = val.get<std::size_t>();
            else if (key == "imp_vocab_per_class") cfg.imp_vocab_per_class = val.get<std::size_t>();
            else if (key == "shared_noise_vocab") cfg.shared_noise_vocab = val.get<std::size_t>();
            else if (key == "fnd_signal") cfg.fnd_signal = val.get<double>();
            else if (key == "imp_signal") cfg.imp_signal = val.get<double>();
            else if (key == "fnd_length_mean") cfg.fnd_length_mean = val.get<double>();
            else if (key == "imp_length_mean") cfg.imp_length_mean = val.get<double>();
            else if (key == "axis") cfg.axis = val.get<std::string>();
            else if (key == "values") cfg.values = val.get<std::vector<double>>();
            else throw ConfigError("config file: unknown key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file key '" + key + "': " + e.what());
        }
    }
}

fs::path resolve_out_dir(const RunConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    if (const char* env = std::getenv("COTRAIN_OUT")) return fs::path(env);
    return fs::path("out");
}

double resolve_top_k(const RunConfig& cfg) {
    if (cfg.top_k_percent != 0.0) return cfg.top_k_percent;
    return LabelSpace::by_name(cfg.task) == LabelSpace::bt() ? 50.0 : 25.0;
}

std::vector<std::string> resolve_settings(const RunConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& s : cfg.settings) {
        if (s == "all") {
            for (const auto& name : all_setting_names()) out.push_back(name);
        } else {
            out.push_back(s);
        }
    }
    std::vector<std::string> dedup;
    for (const auto& s : out)
        if (std::find(dedup.begin(), dedup.end(), s) == dedup.end()) dedup.push_back(s);
    return dedup;
}

GenConfig resolve_gen_config(const RunConfig& cfg) {
    GenConfig gen = GenConfig::defaults_for(LabelSpace::by_name(cfg.task));
    gen.n_labeled = cfg.n_labeled;
    gen.n_unlabeled = cfg.n_unlabeled;
    gen.n_test = cfg.n_test;
    gen.vocab_per_class = cfg.vocab_per_class;
    gen.imp_vocab_per_class = cfg.imp_vocab_per_class;
    gen.shared_noise_vocab = cfg.shared_noise_vocab;
    gen.fnd_signal = cfg.fnd_signal;
    gen.imp_signal = cfg.imp_signal;
    gen.fnd_length_mean = cfg.fnd_length_mean;
    gen.imp_length_mean = cfg.imp_length_mean;
    gen.seed = derive_seed(cfg.master_seed, {kRoleGenerate});
    gen.validate();
    return gen;
}

ExperimentPlan resolve_plan(const RunConfig& cfg) {
    ExperimentPlan plan;
    plan.cotrain.task = LabelSpace::by_name(cfg.task);
    plan.cotrain.top_k_percent = resolve_top_k(cfg);
    plan.cotrain.max_rounds = cfg.max_rounds;
    plan.cotrain.train_cfg = cfg.train;
    plan.cotrain.warm_start = cfg.warm_start;
    plan.cotrain.min_df = cfg.min_df;
    plan.settings = resolve_settings(cfg);
    plan.seeds = cfg.seeds;
    plan.folds = cfg.folds;
    plan.split_seed = derive_seed(cfg.master_seed, {kRoleSplit});
    plan.validate();
    return plan;
}

namespace {

ojson resolved_snapshot(const RunConfig& cfg, const char* subcommand) {
    ojson doc;
    doc["subcommand"] = subcommand;
    doc["task"] = cfg.task;
    doc["master_seed"] = cfg.master_seed;
    doc["synthetic"] = cfg.synthetic;
    if (!cfg.labeled_path.empty()) doc["labeled"] = cfg.labeled_path.string();
    if (!cfg.pool_path.empty()) doc["pool"] = cfg.pool_path.string();
    if (!cfg.hidden_path.empty()) doc["hidden"] = cfg.hidden_path.string();
    if (!cfg.in_dir.empty()) doc["in_dir"] = cfg.in_dir.string();
    doc["settings"] = resolve_settings(cfg);
    doc["seeds"] = cfg.seeds;
    doc["folds"] = cfg.folds;
    doc["top_k_percent"] = resolve_top_k(cfg);
    doc["max_rounds"] = cfg.max_rounds;
    doc["warm_start"] = cfg.warm_start;
    doc["min_df"] = cfg.min_df;
    doc["learning_rate"] = cfg.train.learning_rate;
    doc["l2_penalty"] = cfg.train.l2_penalty;
    doc["max_epochs"] = cfg.train.max_epochs;
    doc["batch_size"] = cfg.train.batch_size;
    doc["patience"] = cfg.train.patience;
    doc["n_labeled"] = cfg.n_labeled;
    doc["n_unlabeled"] = cfg.n_unlabeled;
    doc["n_test"] = cfg.n_test;
    doc["vocab_per_class"] = cfg.vocab_per_class;
    doc["imp_vocab_per_class"] = cfg.imp_vocab_per_class;
    doc["shared_noise_vocab"] = cfg.shared_noise_vocab;
    doc["fnd_signal"] = cfg.fnd_signal;
    doc["imp_signal"] = cfg.imp_signal;
    doc["fnd_length_mean"] = cfg.fnd_length_mean;
    doc["imp_length_mean"] = cfg.imp_length_mean;
    if (!cfg.axis.empty()) doc["axis"] = cfg.axis;
    if (!cfg.values.empty()) doc["values"] = cfg.values;
    return doc;
}

void write_snapshot(const RunConfig& cfg, const char* subcommand, const fs::path& out_dir) {
    std::ofstream out(out_dir / "config-resolved.json");
    if (!out) throw IoError("cannot write config-resolved.json");
    out << resolved_snapshot(cfg, subcommand).dump(2) << '\n';
}

std::map<std::string, Label> load_hidden_labels(const fs::path& path, const LabelSpace& space) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open hidden labels file '" + path.string() + "'");
    nlohmann::json doc;
    in >> doc;
    std::map<std::string, Label> hidden;
    for (const auto& [id, name] : doc.items()) {
        auto idx = space.class_index(name.get<std::string>());
        if (!idx) throw DataError("hidden labels: unknown class '" + name.get<std::string>() + "'");
        hidden.emplace(id, Label{*idx});
    }
    return hidden;
}

void save_hidden_labels(const std::map<std::string, Label>& hidden, const LabelSpace& space,
                        const fs::path& path) {
    ojson doc = ojson::object();
    for (const auto& [id, label] : hidden) doc[id] = space.class_names.at(label.value);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << doc.dump() << '\n';
}

} // namespace

int cmd_parse(const RunConfig& cfg) {
    if (cfg.in_dir.empty() || !fs::is_directory(cfg.in_dir)) {
        std::cerr << "error: --in must name a directory of .txt reports\n";
        return 2;
    }
    const SectionLayout layout = cfg.aliases_path.empty()
                                     ? SectionLayout::standard()
                                     : SectionLayout::with_alias_file(cfg.aliases_path);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cfg.in_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "error: no .txt reports in '" << cfg.in_dir.string() << "'\n";
        return 2;
    }

    std::vector<Report> parsed;
    std::size_t rejected = 0;
    for (const auto& file : files) {
        std::ifstream in(file);
        std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        try {
            parsed.push_back(parse_report(raw, layout, file.stem().string()));
        } catch (const Error& e) {
            ++rejected;
            std::cerr << "warning: skipping " << file.filename().string() << ": " << e.what()
                      << "\n";
        }
    }

    fs::path out_file = cfg.out_file.empty() ? (resolve_out_dir(cfg) / "corpus.jsonl")
                                             : cfg.out_file;
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());

    std::cout << "parsed " << parsed.size() << " reports, rejected " << rejected << "\n";
    if (parsed.empty()) {
        std::cerr << "error: every report failed to parse\n";
        return 1;
    }
    save_unlabeled(UnlabeledDataset(std::move(parsed)), out_file);
    std::cout << "wrote " << out_file.string() << "\n";
    return 0;
}

int cmd_generate(const RunConfig& cfg) {
    const GenConfig gen = resolve_gen_config(cfg);
    const fs::path out_dir = resolve_out_dir(cfg);
    fs::create_directories(out_dir);
    DirLock lock(out_dir);
    write_snapshot(cfg, "generate", out_dir);

    const SynthCorpus corpus = generate(gen);
    save_labeled(corpus.labeled, out_dir / "labeled.jsonl");
    save_unlabeled(corpus.pool, out_dir / "unlabeled.jsonl");
    save_labeled(corpus.test, out_dir / "test.jsonl");
    save_hidden_labels(corpus.hidden_labels, gen.space, out_dir / "hidden_labels.json");

    std::cout << "generated " << corpus.labeled.size() << " labeled, " << corpus.pool.size()
              << " unlabeled, " << corpus.test.size() << " test reports in " << out_dir.string()
              << "\n";
    return 0;
}

namespace {

struct LoadedCorpus {
    LabeledDataset labeled;
    UnlabeledDataset pool;
    std::map<std::string, Label> hidden;
    bool has_hidden = false;
};

LoadedCorpus obtain_corpus(const RunConfig& cfg, bool semisup_requested) {
    LoadedCorpus out;
    const LabelSpace space = LabelSpace::by_name(cfg.task);
    if (cfg.synthetic) {
        SynthCorpus corpus = generate(resolve_gen_config(cfg));
        out.labeled = std::move(corpus.labeled);
        out.pool = std::move(corpus.pool);
        out.hidden = std::move(corpus.hidden_labels);
        out.has_hidden = true;
        return out;
    }
    if (cfg.labeled_path.empty())
        throw ConfigError("no labeled corpus: pass --labeled FILE or --synthetic");
    if (!fs::exists(cfg.labeled_path))
        throw ConfigError("labeled corpus '" + cfg.labeled_path.string() + "' does not exist");
    if (semisup_requested && cfg.pool_path.empty())
        throw ConfigError("semi-supervised settings need an unlabeled pool: pass --pool FILE");
    if (!cfg.pool_path.empty() && !fs::exists(cfg.pool_path))
        throw ConfigError("pool corpus '" + cfg.pool_path.string() + "' does not exist");

    out.labeled = load_labeled(cfg.labeled_path, space);
    if (!cfg.pool_path.empty()) out.pool = load_unlabeled(cfg.pool_path);
    if (!cfg.hidden_path.empty()) {
        out.hidden = load_hidden_labels(cfg.hidden_path, space);
        out.has_hidden = true;
    }
    return out;
}

} // namespace

int cmd_experiment(const RunConfig& cfg) {
    // pre-flight: every configuration error must surface before training starts
    const ExperimentPlan plan = resolve_plan(cfg);
    bool semisup = false;
    for (const auto& s : plan.settings) semisup = semisup || is_semisup_setting(s);
    LoadedCorpus corpus = obtain_corpus(cfg, semisup);

    const fs::path out_dir = resolve_out_dir(cfg);
    fs::create_directories(out_dir);
    DirLock lock(out_dir);
    write_snapshot(cfg, "experiment", out_dir);

    const ExperimentReport report = run_experiment(corpus.labeled, corpus.pool, plan);
    report.save(out_dir / "report.json");
    {
        std::ofstream table(out_dir / "report.txt");
        if (!table) throw IoError("cannot write report.txt");
        table << report.to_table();
    }
    std::cout << report.to_table();
    std::cout << "wrote " << (out_dir / "report.json").string() << "\n";
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    if (cfg.axis != "top_k" && cfg.axis != "pool_size")
        throw ConfigError("sweep --axis must be top_k or pool_size");
    if (cfg.values.empty()) throw ConfigError("sweep needs at least one --values entry");

    LoadedCorpus corpus = obtain_corpus(cfg, /*semisup_requested=*/true);
    for (double v : cfg.values) {
        if (cfg.axis == "top_k") {
            if (!(v > 0.0) || v > 100.0)
                throw ConfigError("invalid top_k value " + std::to_string(v));
        } else {
            if (v < 1.0 || v != std::floor(v) ||
                static_cast<std::size_t>(v) > corpus.pool.size())
                throw ConfigError("invalid pool_size value " + std::to_string(v) +
                                  " (pool holds " + std::to_string(corpus.pool.size()) + ")");
        }
    }

    const fs::path out_dir = resolve_out_dir(cfg);
    fs::create_directories(out_dir);
    DirLock lock(out_dir);
    write_snapshot(cfg, "sweep", out_dir);

    CotrainConfig base;
    base.task = LabelSpace::by_name(cfg.task);
    base.top_k_percent = resolve_top_k(cfg);
    base.max_rounds = cfg.max_rounds;
    base.train_cfg = cfg.train;
    base.warm_start = cfg.warm_start;
    base.min_df = cfg.min_df;
    base.validate();

    const auto triples = split_k_folds(corpus.labeled, cfg.folds,
                                       derive_seed(cfg.master_seed, {kRoleSplit}));
    const FoldTriple& triple = triples.front();

    // supervised starting point shared by every sweep value
    TrainConfig sup_cfg = cfg.train;
    sup_cfg.seed = derive_seed(cfg.master_seed, {kRoleSupInit, 1});
    const ViewModel sup_fnd =
        train_supervised(triple.train, triple.valid, View::fnd, sup_cfg, cfg.min_df);
    sup_cfg.seed = derive_seed(cfg.master_seed, {kRoleSupInit, 2});
    const ViewModel sup_imp =
        train_supervised(triple.train, triple.valid, View::imp, sup_cfg, cfg.min_df);

    std::ofstream csv(out_dir / "sweep.csv");
    if (!csv) throw IoError("cannot write sweep.csv");
    csv << "value,setting,accuracy,pseudo_label_precision\n";
    std::ofstream logs(out_dir / "roundlogs.jsonl");
    if (!logs) throw IoError("cannot write roundlogs.jsonl");

    for (double v : cfg.values) {
        CotrainConfig run_cfg = base;
        UnlabeledDataset pool = corpus.pool;
        if (cfg.axis == "top_k") {
            run_cfg.top_k_percent = v;
        } else {
            pool.items.erase(pool.items.begin() + static_cast<std::ptrdiff_t>(v),
                             pool.items.end());
        }
        std::uint64_t vbits;
        static_assert(sizeof(vbits) == sizeof(v));
        std::memcpy(&vbits, &v, sizeof(vbits));
        run_cfg.train_cfg.seed = derive_seed(cfg.master_seed, {kRoleSweepRun, vbits});

        const CotrainResult res = cotrain(triple.train, triple.valid, pool, run_cfg, &sup_fnd,
                                          &sup_imp);

        std::string precision;
        if (corpus.has_hidden && !res.selections.empty()) {
            // first selection of the run: same starting predictions across values
            const auto pr = pseudo_label_precision(res.selections.front(), corpus.hidden);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", pr.value);
            precision = buf;
        }
        const double acc_fnd = view_accuracy(res.fnd, triple.test);
        const double acc_imp = view_accuracy(res.imp, triple.test);
        const double acc_ens = ensemble_accuracy(res.fnd, res.imp, triple.test);
        char row[192];
        std::snprintf(row, sizeof(row), "%g,cotrain-fnd,%.6f,%s\n", v, acc_fnd, precision.c_str());
        csv << row;
        std::snprintf(row, sizeof(row), "%g,cotrain-imp,%.6f,%s\n", v, acc_imp, precision.c_str());
        csv << row;
        std::snprintf(row, sizeof(row), "%g,cotrain-ensemble,%.6f,%s\n", v, acc_ens,
                      precision.c_str());
        csv << row;

        for (const auto& log : res.logs) {
            ojson rec;
            rec["value"] = v;
            rec["round"] = log.round;
            rec["fnd_valid_acc"] = log.fnd_valid_acc;
            rec["imp_valid_acc"] = log.imp_valid_acc;
            rec["ensemble_valid_acc"] = log.ensemble_valid_acc;
            rec["fnd_selected"] = log.fnd_selected;
            rec["imp_selected"] = log.imp_selected;
            rec["agreement_rate"] = log.agreement_rate;
            if (!log.note.empty()) rec["note"] = log.note;
            logs << rec.dump() << '\n';
        }
    }
    std::cout << "wrote " << (out_dir / "sweep.csv").string() << "\n";
    return 0;
}

} // namespace cotrain::cli
