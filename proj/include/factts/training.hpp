#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factts/network.hpp"

namespace factts {

// Per-output-dimension normalization to zero mean and unit variance.
struct NormStats {
    Vector mean;
    Vector std;  // population standard deviation, strictly positive
};

// Sample mean and population standard deviation per dimension. Throws
// DegenerateDimension when any dimension has zero variance.
NormStats compute_norm_stats(const std::vector<Vector>& targets);

void normalize(const NormStats& stats, Vector& v);
void denormalize(const NormStats& stats, Vector& v);

// Mean over dimensions of squared differences.
double mse_loss(std::span<const double> pred, std::span<const double> target);
// d(mse)/d(pred) = 2 (pred - target) / dim
Vector mse_loss_grad(std::span<const double> pred, std::span<const double> target);

// v <- momentum*v - lr*g;  theta <- theta + v
// Throws NumericalError on non-finite gradients.
void momentum_sgd_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum);

struct TrainConfig {
    double learning_rate = 0.16;
    double momentum = 0.9;
    int minibatch_size = 64;
    int epochs = 20;
    std::uint64_t shuffle_seed = 0;
};

enum class Task { duration, acoustic };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

// Published defaults: duration models use lr 0.16 (0.08 for aim) with
// minibatch 64 (16 for sed); acoustic models use lr 1.28 with minibatch 128;
// momentum is 0.9 throughout.
TrainConfig default_train_config(Task task, ArchKind arch);

// One training sample; `target` is expected to be pre-normalized.
struct Sample {
    Vector x;
    int speaker = 1;               // 1-based
    EmotionIndex emotion = EmotionIndex::neutral();
    Vector target;
};

using SampleSet = std::vector<Sample>;

struct TrainReport {
    Vector train_mse;  // per epoch
    Vector valid_mse;  // per epoch
    int best_epoch = -1;  // 1-based id of the snapshot the network ends up holding
};

// Minibatch momentum-SGD minimizing MSE. Shuffles each epoch from
// cfg.shuffle_seed, averages gradients within a minibatch, keeps the last
// short minibatch, and finishes by restoring the epoch snapshot with the
// best validation loss. Raises NumericalError (with the epoch index) instead
// of continuing on a non-finite loss.
TrainReport train(Network& net, const SampleSet& train_set, const SampleSet& valid_set,
                  const TrainConfig& cfg, const NormStats& stats);

// Mean MSE of the network over a sample set.
double evaluate_mse(const Network& net, const SampleSet& set);

void write_curves_csv(const TrainReport& report, const std::string& path);

}  // namespace factts
