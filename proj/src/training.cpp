#include "factts/training.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "factts/errors.hpp"
#include "factts/io.hpp"
#include "factts/rng.hpp"

namespace factts {

NormStats compute_norm_stats(const std::vector<Vector>& targets) {
    if (targets.size() < 2) throw InvalidConfig("need at least two samples for norm stats");
    const std::size_t dim = targets.front().size();
    NormStats st;
    st.mean.assign(dim, 0.0);
    st.std.assign(dim, 0.0);
    for (const Vector& t : targets) {
        if (t.size() != dim) throw ShapeError("inconsistent target dimensions");
        for (std::size_t k = 0; k < dim; ++k) st.mean[k] += t[k];
    }
    const double n = static_cast<double>(targets.size());
    for (double& m : st.mean) m /= n;
    for (const Vector& t : targets)
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = t[k] - st.mean[k];
            st.std[k] += d * d;
        }
    for (std::size_t k = 0; k < dim; ++k) {
        st.std[k] = std::sqrt(st.std[k] / n);
        if (st.std[k] == 0.0)
            throw DegenerateDimension("target dimension " + std::to_string(k) +
                                      " has zero variance");
    }
    return st;
}

void normalize(const NormStats& stats, Vector& v) {
    if (v.size() != stats.mean.size()) throw ShapeError("normalize: dimension mismatch");
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = (v[k] - stats.mean[k]) / stats.std[k];
}

void denormalize(const NormStats& stats, Vector& v) {
    if (v.size() != stats.mean.size()) throw ShapeError("denormalize: dimension mismatch");
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = v[k] * stats.std[k] + stats.mean[k];
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size() || pred.empty())
        throw ShapeError("mse_loss: dimension mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = pred[k] - target[k];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

Vector mse_loss_grad(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size() || pred.empty())
        throw ShapeError("mse_loss_grad: dimension mismatch");
    Vector g(pred.size());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) g[k] = scale * (pred[k] - target[k]);
    return g;
}

void momentum_sgd_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum) {
    if (params.size() != grads.size() || params.size() != velocity.size())
        throw ShapeError("momentum_sgd_step: shape mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw NumericalError("non-finite gradient in SGD step");
    kernels::active().scal(momentum, velocity.data(), velocity.size());
    kernels::active().axpy(-lr, grads.data(), velocity.data(), velocity.size());
    kernels::active().axpy(1.0, velocity.data(), params.data(), params.size());
}

std::string to_string(Task t) { return t == Task::duration ? "duration" : "acoustic"; }

Task task_from_string(const std::string& s) {
    if (s == "duration") return Task::duration;
    if (s == "acoustic") return Task::acoustic;
    throw InvalidConfig("unknown task: " + s);
}

TrainConfig default_train_config(Task task, ArchKind arch) {
    TrainConfig cfg;
    if (task == Task::duration) {
        cfg.learning_rate = arch == ArchKind::aim ? 0.08 : 0.16;
        cfg.minibatch_size = arch == ArchKind::sed ? 16 : 64;
    } else {
        cfg.learning_rate = 1.28;
        cfg.minibatch_size = 128;
    }
    cfg.momentum = 0.9;
    return cfg;
}

namespace {

struct IdTable {
    std::vector<EmotionId> emotion;  // index 0 = neutral
    std::vector<SpeakerId> speaker;  // index j-1 = speaker j

    IdTable(int emotions, int speakers) {
        emotion.push_back(emotion_id(EmotionIndex::neutral(), emotions));
        for (int i = 1; i <= emotions; ++i)
            emotion.push_back(emotion_id(EmotionIndex::at(i), emotions));
        for (int j = 1; j <= speakers; ++j) speaker.push_back(speaker_id(j, speakers));
    }

    const EmotionId& of(EmotionIndex e) const {
        return emotion[e.is_neutral() ? 0 : static_cast<std::size_t>(e.index())];
    }
    const SpeakerId& of_speaker(int j) const { return speaker[static_cast<std::size_t>(j - 1)]; }
};

void apply_update(Network& net, const Gradients& grads, Gradients& velocity, double lr,
                  double momentum) {
    std::size_t i = 0;
    for_each_block(net, [&](std::span<double> block) {
        momentum_sgd_step(block, grads.blocks[i], velocity.blocks[i], lr, momentum);
        ++i;
    });
}

}  // namespace

double evaluate_mse(const Network& net, const SampleSet& set) {
    if (set.empty()) throw EmptyInput("evaluate_mse: empty sample set");
    IdTable ids(net.emotions, net.speakers);
    double acc = 0.0;
    for (const Sample& s : set) {
        const Vector pred = forward(net, s.x, ids.of(s.emotion), ids.of_speaker(s.speaker));
        acc += mse_loss(pred, s.target);
    }
    return acc / static_cast<double>(set.size());
}

TrainReport train(Network& net, const SampleSet& train_set, const SampleSet& valid_set,
                  const TrainConfig& cfg, const NormStats& stats) {
    if (cfg.epochs < 0) throw InvalidConfig("negative epoch count");
    TrainReport report;
    if (cfg.epochs == 0) return report;
    if (train_set.empty()) throw InvalidConfig("empty training set");
    if (valid_set.empty()) throw InvalidConfig("empty validation set");
    if (cfg.minibatch_size < 1 ||
        static_cast<std::size_t>(cfg.minibatch_size) > train_set.size())
        throw InvalidConfig("minibatch size must be in [1, training-set size]");
    if (cfg.learning_rate <= 0.0) throw InvalidConfig("learning rate must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw InvalidConfig("momentum must be in [0, 1)");
    if (stats.mean.size() != static_cast<std::size_t>(net.output_dim))
        throw ShapeError("norm stats do not match the network output dimension");

    IdTable ids(net.emotions, net.speakers);
    Gradients velocity = zero_gradients(net);
    Gradients grads = zero_gradients(net);
    Rng rng(cfg.shuffle_seed);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    Vector best_params;
    double best_valid = 0.0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        const std::size_t batch = static_cast<std::size_t>(cfg.minibatch_size);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(start + batch, order.size());
            for (Vector& b : grads.blocks) std::fill(b.begin(), b.end(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const Sample& s = train_set[order[k]];
                const ForwardTrace tr =
                    forward_trace(net, s.x, ids.of(s.emotion), ids.of_speaker(s.speaker));
                epoch_loss += mse_loss(tr.prediction(), s.target);
                const Vector g = mse_loss_grad(tr.prediction(), s.target);
                backward_accumulate(net, tr, g, grads);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (Vector& b : grads.blocks) kernels::active().scal(inv, b.data(), b.size());
            try {
                apply_update(net, grads, velocity, cfg.learning_rate, cfg.momentum);
            } catch (const NumericalError& e) {
                throw NumericalError(std::string(e.what()) + " at epoch " +
                                     std::to_string(epoch));
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss))
            throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
        const double valid_loss = evaluate_mse(net, valid_set);
        if (!std::isfinite(valid_loss))
            throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
        report.train_mse.push_back(epoch_loss);
        report.valid_mse.push_back(valid_loss);
        if (report.best_epoch < 0 || valid_loss < best_valid) {
            best_valid = valid_loss;
            best_params = get_params(net);
            report.best_epoch = epoch;
        }
    }
    set_params(net, best_params);
    return report;
}

void write_curves_csv(const TrainReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidConfig("cannot open curves file for writing: " + path);
    os << "epoch,train_mse,valid_mse\n";
    for (std::size_t i = 0; i < report.train_mse.size(); ++i)
        os << (i + 1) << ',' << io::fmt_double(report.train_mse[i]) << ','
           << io::fmt_double(report.valid_mse[i]) << '\n';
}

}  // namespace factts
