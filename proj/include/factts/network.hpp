#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "factts/factors.hpp"
#include "factts/linalg.hpp"

namespace factts {

enum class Activation { sigmoid, linear };

double apply_activation(Activation a, double z);
// Derivative expressed through the post-activation value.
double activation_deriv_from_output(Activation a, double out);

// h = f(W h_prev + b)
struct DenseLayer {
    Matrix weights;
    Vector bias;
    Activation activation = Activation::sigmoid;
};

// h = f(W h_prev + Wa aux + b); equivalent to a dense layer over the
// concatenated input [h_prev; aux].
struct AugmentedInputLayer {
    Matrix weights;
    Matrix aux_weights;
    Vector bias;
    Activation activation = Activation::sigmoid;
};

struct Branch {
    Matrix weights;
    Vector bias;
    Activation activation = Activation::sigmoid;
};

// h = sum_i aux_i * f_i(W_i h_prev + b_i). Every branch shares input and
// output dimensions. Branch order matches the corresponding layer_aux
// order: (emotion 1..M, speaker 1..N, shared) for parallel-style layers and
// (factor 1..K, shared) for serial-style layers.
struct FactoredLayer {
    std::vector<Branch> branches;
};

using Layer = std::variant<DenseLayer, AugmentedInputLayer, FactoredLayer>;

struct Network {
    ArchKind kind = ArchKind::sed;
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int output_dim = 0;
    int emotions = 0;  // M
    int speakers = 0;  // N
    std::uint64_t init_seed = 0;
    std::vector<Layer> layers;

    // Bumped by every parameter mutation; forward traces remember the value
    // they were taken at so a stale trace cannot feed backward().
    std::uint64_t revision = 0;
};

// Assemble one of the eight architectures with the given topology. Hidden
// activations are sigmoid, the output activation is linear. Weights are
// initialized uniformly on +-sqrt(6/(fan_in+fan_out)) from init_seed, biases
// start at zero.
Network build_architecture(ArchKind kind, int input_dim, const std::vector<int>& hidden_dims,
                           int output_dim, int emotions, int speakers,
                           std::uint64_t init_seed);

// Per-layer forward primitives.
Vector forward_dense(const DenseLayer& layer, std::span<const double> h_prev);
Vector forward_augmented(const AugmentedInputLayer& layer, std::span<const double> h_prev,
                         const AuxVector& aux);
// Weighted branch sum accumulated in fixed left-to-right branch order;
// branches whose weight is exactly 0 contribute exact zeros and are skipped.
Vector forward_factored(const FactoredLayer& layer, std::span<const double> h_prev,
                        const AuxVector& aux);

// Full-stack evaluation, routing layer_aux(kind, placement, e, s) to each
// augmented/factored layer.
Vector forward(const Network& net, std::span<const double> x, const EmotionId& e,
               const SpeakerId& s);

// Forward pass that caches everything backward() needs.
struct ForwardTrace {
    Vector input;
    EmotionId e;
    SpeakerId s;
    std::vector<Vector> outputs;                    // post-activation per layer
    std::vector<Vector> aux;                        // aux values per layer (empty: none)
    std::vector<std::vector<Vector>> branch_outputs;  // per layer, per branch (empty: skipped)
    std::uint64_t net_revision = 0;

    const Vector& prediction() const { return outputs.back(); }
};

ForwardTrace forward_trace(const Network& net, std::span<const double> x, const EmotionId& e,
                           const SpeakerId& s);

// Gradient blocks in canonical parameter-walk order (see param_layout).
struct Gradients {
    std::vector<Vector> blocks;
};

Gradients zero_gradients(const Network& net);

// Exact gradients of the scalar loss whose output-gradient is grad_out.
// Throws InvalidState if the trace predates a parameter mutation.
Gradients backward(const Network& net, const ForwardTrace& trace,
                   std::span<const double> grad_out);
// Accumulating variant used by the minibatch loop.
void backward_accumulate(const Network& net, const ForwardTrace& trace,
                         std::span<const double> grad_out, Gradients& acc);

// Canonical parameter walk: for each layer in order, dense -> W, b;
// augmented -> W, Wa, b; factored -> W_1, b_1, ..., W_I, b_I.
struct BlockInfo {
    int layer = 0;
    int branch = -1;          // branch index for factored layers
    std::string label;        // e.g. "dense.W", "branch[emotion_1].W"
    bool is_bias = false;
    std::size_t rows = 0, cols = 0;
    std::size_t offset = 0;   // position in the flat parameter vector
    std::size_t count = 0;
};

std::vector<BlockInfo> param_layout(const Network& net);
// Human-readable identity of a factored-layer branch, e.g. "emotion_1",
// "speaker_3" or "shared", following the fixed branch ordering.
std::string branch_label(const Network& net, std::size_t layer_index, std::size_t branch_index);
std::size_t param_count(const Network& net);
Vector get_params(const Network& net);
void set_params(Network& net, std::span<const double> params);
Vector flatten(const Network& net, const Gradients& grads);

// Visit every parameter block as a mutable span, walk order as above.
template <typename F>
void for_each_block(Network& net, F&& f) {
    for (Layer& layer : net.layers) {
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            f(std::span<double>(d->weights.data));
            f(std::span<double>(d->bias));
        } else if (auto* a = std::get_if<AugmentedInputLayer>(&layer)) {
            f(std::span<double>(a->weights.data));
            f(std::span<double>(a->aux_weights.data));
            f(std::span<double>(a->bias));
        } else {
            auto& fl = std::get<FactoredLayer>(layer);
            for (Branch& br : fl.branches) {
                f(std::span<double>(br.weights.data));
                f(std::span<double>(br.bias));
            }
        }
    }
    ++net.revision;
}

template <typename F>
void for_each_block(const Network& net, F&& f) {
    for (const Layer& layer : net.layers) {
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            f(std::span<const double>(d->weights.data));
            f(std::span<const double>(d->bias));
        } else if (auto* a = std::get_if<AugmentedInputLayer>(&layer)) {
            f(std::span<const double>(a->weights.data));
            f(std::span<const double>(a->aux_weights.data));
            f(std::span<const double>(a->bias));
        } else {
            const auto& fl = std::get<FactoredLayer>(layer);
            for (const Branch& br : fl.branches) {
                f(std::span<const double>(br.weights.data));
                f(std::span<const double>(br.bias));
            }
        }
    }
}

// Model file: text key-value header, then the parameter blocks in walk order
// as raw 64-bit little-endian doubles. Round-trips bit-exactly. A model may
// optionally carry the per-output-dimension normalization stats it was
// trained with (empty vectors when absent).
void save_model(const Network& net, const std::string& path,
                const Vector& target_mean = {}, const Vector& target_std = {});

struct LoadedModel {
    Network net;
    Vector target_mean;
    Vector target_std;
};

LoadedModel load_model(const std::string& path);

}  // namespace factts
