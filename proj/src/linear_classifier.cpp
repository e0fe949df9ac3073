#include "cotrain/linear_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "cotrain/rng.hpp"
#include "json.hpp"

namespace cotrain {

ClassifierParams::ClassifierParams(LabelSpace space, std::size_t dim, std::uint64_t vocab_hash)
    : space_(std::move(space)), dim_(dim), vocab_hash_(vocab_hash) {
    space_.validate();
    if (dim_ == 0) throw ContractError("ClassifierParams: dimension must be positive");
    weights_.assign(static_cast<std::size_t>(space_.k) * dim_, 0.0);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (l2_penalty < 0.0) throw ConfigError("l2_penalty must be non-negative");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
}

namespace {

double sparse_dot(std::span<const double> row, const FeatureVector& x) {
    double acc = 0.0;
    for (const auto& [idx, w] : x.entries) acc += row[idx] * w;
    return acc;
}

void check_dims(const ClassifierParams& params, const FeatureVector& x) {
    if (x.dimension != params.dim())
        throw ContractError("feature dimension " + std::to_string(x.dimension) +
                            " does not match classifier dimension " + std::to_string(params.dim()));
}

// softmax of logits, in place, with max subtraction
void softmax(std::vector<double>& z) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

} // namespace

std::vector<double> predict_dist(const ClassifierParams& params, const FeatureVector& x) {
    check_dims(params, x);
    std::vector<double> z(static_cast<std::size_t>(params.num_classes()));
    for (int k = 0; k < params.num_classes(); ++k) z[k] = sparse_dot(params.row(k), x);
    softmax(z);
    return z;
}

std::pair<Label, double> predict_label(const ClassifierParams& params, const FeatureVector& x) {
    const auto dist = predict_dist(params, x);
    int best = 0;
    for (int k = 1; k < static_cast<int>(dist.size()); ++k) {
        if (dist[k] > dist[best]) best = k;
    }
    return {Label{best}, dist[best]};
}

LossGrad loss_and_grad(const ClassifierParams& params, std::span<const TrainExample> batch,
                       double l2_penalty) {
    if (batch.empty()) throw ContractError("loss_and_grad: empty batch");
    const int K = params.num_classes();
    const std::size_t dim = params.dim();

    LossGrad out;
    out.loss = 0.0;
    out.grad.assign(static_cast<std::size_t>(K) * dim, 0.0);

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<double> dist(static_cast<std::size_t>(K));
    for (const auto& ex : batch) {
        check_dims(params, ex.x);
        if (ex.y.value < 0 || ex.y.value >= K)
            throw ContractError("loss_and_grad: label out of range");
        for (int k = 0; k < K; ++k) dist[k] = sparse_dot(params.row(k), ex.x);
        softmax(dist);
        out.loss += -std::log(dist[ex.y.value]) * inv_b;
        for (int k = 0; k < K; ++k) {
            const double coeff = (dist[k] - (k == ex.y.value ? 1.0 : 0.0)) * inv_b;
            double* grow = out.grad.data() + static_cast<std::size_t>(k) * dim;
            for (const auto& [idx, w] : ex.x.entries) grow[idx] += coeff * w;
        }
    }
    if (l2_penalty > 0.0) {
        double sq = 0.0;
        const auto& w = params.weights();
        for (std::size_t i = 0; i < w.size(); ++i) {
            sq += w[i] * w[i];
            out.grad[i] += l2_penalty * w[i];
        }
        out.loss += 0.5 * l2_penalty * sq;
    }
    return out;
}

namespace {

// Full-data objective for reporting: mean NLL over all of `data` + L2 term.
double full_loss(std::span<const TrainExample> data, const std::vector<double>& weights,
                 int K, std::size_t dim, double l2_penalty) {
    double nll = 0.0;
    std::vector<double> z(static_cast<std::size_t>(K));
    for (const auto& ex : data) {
        for (int k = 0; k < K; ++k) {
            const double* row = weights.data() + static_cast<std::size_t>(k) * dim;
            double acc = 0.0;
            for (const auto& [idx, w] : ex.x.entries) acc += row[idx] * w;
            z[k] = acc;
        }
        softmax(z);
        nll += -std::log(z[ex.y.value]);
    }
    nll /= static_cast<double>(data.size());
    if (l2_penalty > 0.0) {
        double sq = 0.0;
        for (double w : weights) sq += w * w;
        nll += 0.5 * l2_penalty * sq;
    }
    return nll;
}

double accuracy_on(std::span<const TrainExample> data, const std::vector<double>& weights,
                   int K, std::size_t dim) {
    if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t correct = 0;
    std::vector<double> z(static_cast<std::size_t>(K));
    for (const auto& ex : data) {
        int best = 0;
        for (int k = 0; k < K; ++k) {
            const double* row = weights.data() + static_cast<std::size_t>(k) * dim;
            double acc = 0.0;
            for (const auto& [idx, w] : ex.x.entries) acc += row[idx] * w;
            z[k] = acc;
            if (z[k] > z[best]) best = k;
        }
        if (best == ex.y.value) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

} // namespace

TrainResult train(std::span<const TrainExample> data, std::span<const TrainExample> valid,
                  const TrainConfig& cfg, const LabelSpace& space,
                  const ClassifierParams* init) {
    cfg.validate();
    space.validate();
    if (data.empty()) throw ContractError("train: empty training data");

    const std::size_t dim = data.front().x.dimension;
    const int K = space.k;
    for (const auto& ex : data) {
        if (ex.x.dimension != dim) throw ContractError("train: inconsistent feature dimensions");
        if (ex.y.value < 0 || ex.y.value >= K) throw ContractError("train: label out of range");
    }

    ClassifierParams params = init ? *init : ClassifierParams(space, dim, 0);
    if (init && (init->dim() != dim || init->num_classes() != K))
        throw ContractError("train: init parameter shape does not match data");

    // W is kept as scale * U so the L2 decay is one multiply per batch instead
    // of a dense K x dim pass: W' = (1 - lr*l2) W - lr * grad_batch.
    std::vector<double> u = params.weights();
    double scale = 1.0;

    const std::size_t n = data.size();
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
    const double decay = 1.0 - cfg.learning_rate * cfg.l2_penalty;
    if (decay <= 0.0) throw ConfigError("learning_rate * l2_penalty must be < 1");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(cfg.seed);

    auto materialize = [&](std::vector<double>& w) {
        w = u;
        if (scale != 1.0)
            for (double& v : w) v *= scale;
    };

    TrainResult result;
    std::vector<double> w_now;
    materialize(w_now);
    result.history.push_back(
        {0, full_loss(data, w_now, K, dim, cfg.l2_penalty), accuracy_on(valid, w_now, K, dim)});

    double best_acc = result.history.front().valid_accuracy;
    std::vector<double> best_w = w_now;
    int best_epoch = 0;
    int epochs_since_best = 0;

    std::vector<double> dist(static_cast<std::size_t>(K));
    std::vector<double> coeffs; // per-example softmax-minus-onehot rows for the batch
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            const double inv_b = 1.0 / static_cast<double>(stop - start);

            // batch gradient evaluated at the batch-start parameters
            coeffs.assign((stop - start) * static_cast<std::size_t>(K), 0.0);
            for (std::size_t pos = start; pos < stop; ++pos) {
                const TrainExample& ex = data[order[pos]];
                for (int k = 0; k < K; ++k) {
                    const double* row = u.data() + static_cast<std::size_t>(k) * dim;
                    double acc = 0.0;
                    for (const auto& [idx, w] : ex.x.entries) acc += row[idx] * w;
                    dist[k] = acc * scale;
                }
                softmax(dist);
                double* c = coeffs.data() + (pos - start) * static_cast<std::size_t>(K);
                for (int k = 0; k < K; ++k)
                    c[k] = (dist[k] - (k == ex.y.value ? 1.0 : 0.0)) * inv_b;
            }

            scale *= decay;
            if (scale < 1e-100) { // fold the scale back in before it degenerates
                for (double& v : u) v *= scale;
                scale = 1.0;
            }
            const double step = cfg.learning_rate / scale;

            for (std::size_t pos = start; pos < stop; ++pos) {
                const TrainExample& ex = data[order[pos]];
                const double* c = coeffs.data() + (pos - start) * static_cast<std::size_t>(K);
                for (int k = 0; k < K; ++k) {
                    double* row = u.data() + static_cast<std::size_t>(k) * dim;
                    const double ck = c[k] * step;
                    for (const auto& [idx, w] : ex.x.entries) row[idx] -= ck * w;
                }
            }
        }

        materialize(w_now);
        const double loss = full_loss(data, w_now, K, dim, cfg.l2_penalty);
        if (!std::isfinite(loss))
            throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
        const double vacc = accuracy_on(valid, w_now, K, dim);
        result.history.push_back({epoch, loss, vacc});

        if (valid.empty()) {
            best_w = w_now;
            best_epoch = epoch;
        } else if (vacc > best_acc) {
            best_acc = vacc;
            best_w = w_now;
            best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= cfg.patience) break;
        }
    }

    result.params = init ? *init : ClassifierParams(space, dim, 0);
    result.params.weights() = std::move(best_w);
    result.best_epoch = best_epoch;
    return result;
}

void save_params(const ClassifierParams& params, const std::filesystem::path& path) {
    nlohmann::ordered_json doc;
    doc["task"] = params.space().task_name;
    doc["k"] = params.space().k;
    doc["class_names"] = params.space().class_names;
    doc["dim"] = params.dim();
    doc["vocab_hash"] = params.vocab_hash();
    doc["weights"] = params.weights();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << doc.dump() << '\n';
}

ClassifierParams load_params(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("params file '" + path.string() + "': " + e.what());
    }
    const auto stored_hash = doc.at("vocab_hash").get<std::uint64_t>();
    if (stored_hash != vocab.hash())
        throw DataError("params file '" + path.string() +
                        "' was saved against a different vocabulary");
    LabelSpace space{doc.at("task").get<std::string>(), doc.at("k").get<int>(),
                     doc.at("class_names").get<std::vector<std::string>>()};
    ClassifierParams params(space, doc.at("dim").get<std::size_t>(), stored_hash);
    auto w = doc.at("weights").get<std::vector<double>>();
    if (w.size() != params.weights().size())
        throw DataError("params file '" + path.string() + "': weight size mismatch");
    if (params.dim() != vocab.dimension())
        throw DataError("params file '" + path.string() + "': dimension does not match vocabulary");
    params.weights() = std::move(w);
    return params;
}

} // namespace cotrain
