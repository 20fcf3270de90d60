#include "factts/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "factts/errors.hpp"
#include "factts/io.hpp"
#include "factts/rng.hpp"

namespace factts {

double apply_activation(Activation a, double z) {
    if (a == Activation::linear) return z;
    // numerically stable sigmoid
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double activation_deriv_from_output(Activation a, double out) {
    if (a == Activation::linear) return 1.0;
    return out * (1.0 - out);
}

namespace {

void apply_activation_inplace(Activation a, Vector& v) {
    if (a == Activation::linear) return;
    for (double& z : v) z = apply_activation(a, z);
}

bool is_sm_family(ArchKind k) {
    return k == ArchKind::sm_se || k == ArchKind::sm_es || k == ArchKind::sm_se_aim ||
           k == ArchKind::sm_es_aim;
}

bool is_aim_family(ArchKind k) {
    return k == ArchKind::aim || k == ArchKind::pm_aim || k == ArchKind::sm_se_aim ||
           k == ArchKind::sm_es_aim;
}

bool is_pm_family(ArchKind k) { return k == ArchKind::pm || k == ArchKind::pm_aim; }

Matrix init_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
                   Rng& rng) {
    Matrix m(rows, cols);
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : m.data) w = rng.uniform(-r, r);
    return m;
}

}  // namespace

Network build_architecture(ArchKind kind, int input_dim, const std::vector<int>& hidden_dims,
                           int output_dim, int emotions, int speakers,
                           std::uint64_t init_seed) {
    if (hidden_dims.empty()) throw InvalidTopology("at least one hidden layer is required");
    if (input_dim < 1 || output_dim < 1) throw InvalidTopology("non-positive layer dimension");
    for (int d : hidden_dims)
        if (d < 1) throw InvalidTopology("non-positive hidden dimension");
    if (emotions < 0) throw InvalidTopology("emotion count must be >= 0");
    if (speakers < 1) throw InvalidTopology("speaker count must be >= 1");
    const bool sm = is_sm_family(kind);
    const bool aim = is_aim_family(kind);
    if (sm && aim && hidden_dims.size() < 2)
        throw InvalidTopology("serial+aux-input hybrids need at least two hidden layers");

    Network net;
    net.kind = kind;
    net.input_dim = input_dim;
    net.hidden_dims = hidden_dims;
    net.output_dim = output_dim;
    net.emotions = emotions;
    net.speakers = speakers;
    net.init_seed = init_seed;

    Rng rng(init_seed);
    const int aux_dim = emotions + speakers;
    const std::size_t n_hidden = hidden_dims.size();
    const std::size_t last_hidden = n_hidden - 1;

    auto make_branches = [&](int count, std::size_t out, std::size_t in, Activation act) {
        FactoredLayer fl;
        fl.branches.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            Branch br;
            br.weights = init_matrix(out, in, in, out, rng);
            br.bias = Vector(out, 0.0);
            br.activation = act;
            fl.branches.push_back(std::move(br));
        }
        return fl;
    };

    std::size_t prev = static_cast<std::size_t>(input_dim);
    for (std::size_t i = 0; i < n_hidden; ++i) {
        const std::size_t out = static_cast<std::size_t>(hidden_dims[i]);
        if (i == 0 && aim) {
            AugmentedInputLayer layer;
            const std::size_t fan_in = prev + static_cast<std::size_t>(aux_dim);
            layer.weights = init_matrix(out, prev, fan_in, out, rng);
            layer.aux_weights =
                init_matrix(out, static_cast<std::size_t>(aux_dim), fan_in, out, rng);
            layer.bias = Vector(out, 0.0);
            layer.activation = Activation::sigmoid;
            net.layers.emplace_back(std::move(layer));
        } else if (i == last_hidden && sm) {
            // serial stage one: speakers for sm_se, emotions for sm_es
            const bool speaker_stage = (kind == ArchKind::sm_se || kind == ArchKind::sm_se_aim);
            const int count = (speaker_stage ? speakers : emotions) + 1;
            net.layers.emplace_back(make_branches(count, out, prev, Activation::sigmoid));
        } else {
            DenseLayer layer;
            layer.weights = init_matrix(out, prev, prev, out, rng);
            layer.bias = Vector(out, 0.0);
            layer.activation = Activation::sigmoid;
            net.layers.emplace_back(std::move(layer));
        }
        prev = out;
    }

    const std::size_t out = static_cast<std::size_t>(output_dim);
    if (is_pm_family(kind)) {
        net.layers.emplace_back(
            make_branches(emotions + speakers + 1, out, prev, Activation::linear));
    } else if (sm) {
        const bool speaker_stage = (kind == ArchKind::sm_se || kind == ArchKind::sm_se_aim);
        const int count = (speaker_stage ? emotions : speakers) + 1;
        net.layers.emplace_back(make_branches(count, out, prev, Activation::linear));
    } else {
        DenseLayer layer;
        layer.weights = init_matrix(out, prev, prev, out, rng);
        layer.bias = Vector(out, 0.0);
        layer.activation = Activation::linear;
        net.layers.emplace_back(std::move(layer));
    }
    return net;
}

Vector forward_dense(const DenseLayer& layer, std::span<const double> h_prev) {
    if (h_prev.size() != layer.weights.cols)
        throw ShapeError("forward_dense: input dimension mismatch");
    Vector out = layer.bias;
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < layer.weights.rows; ++r)
        out[r] += k.dot(layer.weights.row(r), h_prev.data(), layer.weights.cols);
    apply_activation_inplace(layer.activation, out);
    return out;
}

Vector forward_augmented(const AugmentedInputLayer& layer, std::span<const double> h_prev,
                         const AuxVector& aux) {
    if (h_prev.size() != layer.weights.cols)
        throw ShapeError("forward_augmented: input dimension mismatch");
    if (aux.size() != layer.aux_weights.cols)
        throw ShapeError("forward_augmented: aux dimension mismatch");
    Vector out = layer.bias;
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < layer.weights.rows; ++r) {
        out[r] += k.dot(layer.weights.row(r), h_prev.data(), layer.weights.cols);
        out[r] += k.dot(layer.aux_weights.row(r), aux.values.data(), layer.aux_weights.cols);
    }
    apply_activation_inplace(layer.activation, out);
    return out;
}

namespace {

// Shared factored-layer evaluation. When `capture` is non-null the
// per-branch activations are stored there (skipped zero-weight branches stay
// empty). The weighted sum runs strictly left to right over branches.
Vector eval_factored(const FactoredLayer& layer, std::span<const double> h_prev,
                     const AuxVector& aux, std::vector<Vector>* capture) {
    const std::size_t n = layer.branches.size();
    if (aux.size() != n) throw ShapeError("forward_factored: aux length != branch count");
    if (n == 0) throw ShapeError("forward_factored: layer has no branches");
    const std::size_t out_dim = layer.branches.front().weights.rows;
    if (capture) capture->assign(n, Vector{});
    Vector out(out_dim, 0.0);
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = aux.values[i];
        if (w == 0.0) continue;  // contributes exact zeros
        const Branch& br = layer.branches[i];
        if (br.weights.rows != out_dim || h_prev.size() != br.weights.cols)
            throw ShapeError("forward_factored: branch dimension mismatch");
        Vector h = br.bias;
        for (std::size_t r = 0; r < br.weights.rows; ++r)
            h[r] += k.dot(br.weights.row(r), h_prev.data(), br.weights.cols);
        apply_activation_inplace(br.activation, h);
        k.axpy(w, h.data(), out.data(), out_dim);
        if (capture) (*capture)[i] = std::move(h);
    }
    return out;
}

Placement placement_of(const Network& net, std::size_t layer_idx) {
    return layer_idx == 0 && std::holds_alternative<AugmentedInputLayer>(net.layers[0])
               ? Placement::input
               : (layer_idx + 1 == net.layers.size() ? Placement::output
                                                     : Placement::last_hidden);
}

void check_factor_dims(const Network& net, const EmotionId& e, const SpeakerId& s) {
    if (static_cast<int>(e.size()) != net.emotions)
        throw ShapeError("emotion ID length does not match the network");
    if (static_cast<int>(s.size()) != net.speakers)
        throw ShapeError("speaker ID length does not match the network");
}

}  // namespace

Vector forward_factored(const FactoredLayer& layer, std::span<const double> h_prev,
                        const AuxVector& aux) {
    return eval_factored(layer, h_prev, aux, nullptr);
}

Vector forward(const Network& net, std::span<const double> x, const EmotionId& e,
               const SpeakerId& s) {
    check_factor_dims(net, e, s);
    if (static_cast<int>(x.size()) != net.input_dim)
        throw ShapeError("input dimension does not match the network");
    Vector h(x.begin(), x.end());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            h = forward_dense(*d, h);
        } else if (auto* a = std::get_if<AugmentedInputLayer>(&layer)) {
            h = forward_augmented(*a, h, layer_aux(net.kind, Placement::input, e, s));
        } else {
            const auto aux = layer_aux(net.kind, placement_of(net, i), e, s);
            h = eval_factored(std::get<FactoredLayer>(layer), h, aux, nullptr);
        }
    }
    return h;
}

ForwardTrace forward_trace(const Network& net, std::span<const double> x, const EmotionId& e,
                           const SpeakerId& s) {
    check_factor_dims(net, e, s);
    if (static_cast<int>(x.size()) != net.input_dim)
        throw ShapeError("input dimension does not match the network");
    ForwardTrace tr;
    tr.input.assign(x.begin(), x.end());
    tr.e = e;
    tr.s = s;
    tr.net_revision = net.revision;
    tr.outputs.resize(net.layers.size());
    tr.aux.resize(net.layers.size());
    tr.branch_outputs.resize(net.layers.size());

    std::span<const double> h(tr.input);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            tr.outputs[i] = forward_dense(*d, h);
        } else if (auto* a = std::get_if<AugmentedInputLayer>(&layer)) {
            auto aux = layer_aux(net.kind, Placement::input, e, s);
            tr.outputs[i] = forward_augmented(*a, h, aux);
            tr.aux[i] = std::move(aux.values);
        } else {
            auto aux = layer_aux(net.kind, placement_of(net, i), e, s);
            tr.outputs[i] =
                eval_factored(std::get<FactoredLayer>(layer), h, aux, &tr.branch_outputs[i]);
            tr.aux[i] = std::move(aux.values);
        }
        h = std::span<const double>(tr.outputs[i]);
    }
    return tr;
}

Gradients zero_gradients(const Network& net) {
    Gradients g;
    for_each_block(net, [&](std::span<const double> block) {
        g.blocks.emplace_back(block.size(), 0.0);
    });
    return g;
}

void backward_accumulate(const Network& net, const ForwardTrace& trace,
                         std::span<const double> grad_out, Gradients& acc) {
    if (trace.net_revision != net.revision)
        throw InvalidState("forward trace is stale: parameters changed since it was taken");
    if (grad_out.size() != static_cast<std::size_t>(net.output_dim))
        throw ShapeError("grad_out dimension mismatch");

    // block index of each layer's first block
    std::vector<std::size_t> layer_block(net.layers.size());
    {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            layer_block[i] = idx;
            if (std::holds_alternative<DenseLayer>(net.layers[i]))
                idx += 2;
            else if (std::holds_alternative<AugmentedInputLayer>(net.layers[i]))
                idx += 3;
            else
                idx += 2 * std::get<FactoredLayer>(net.layers[i]).branches.size();
        }
        if (acc.blocks.size() != idx) throw ShapeError("gradient accumulator shape mismatch");
    }

    Vector grad(grad_out.begin(), grad_out.end());
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Layer& layer = net.layers[li];
        const std::span<const double> h_prev =
            li == 0 ? std::span<const double>(trace.input)
                    : std::span<const double>(trace.outputs[li - 1]);
        Vector grad_prev(h_prev.size(), 0.0);
        const std::size_t b0 = layer_block[li];

        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            Vector gz = grad;
            const Vector& out = trace.outputs[li];
            for (std::size_t k = 0; k < gz.size(); ++k)
                gz[k] *= activation_deriv_from_output(d->activation, out[k]);
            outer_acc_into(acc.blocks[b0], d->weights.rows, d->weights.cols, gz, h_prev);
            axpy(1.0, gz, acc.blocks[b0 + 1]);
            matvec_transpose_acc(d->weights, gz, grad_prev);
        } else if (auto* a = std::get_if<AugmentedInputLayer>(&layer)) {
            Vector gz = grad;
            const Vector& out = trace.outputs[li];
            for (std::size_t k = 0; k < gz.size(); ++k)
                gz[k] *= activation_deriv_from_output(a->activation, out[k]);
            outer_acc_into(acc.blocks[b0], a->weights.rows, a->weights.cols, gz, h_prev);
            outer_acc_into(acc.blocks[b0 + 1], a->aux_weights.rows, a->aux_weights.cols, gz,
                           trace.aux[li]);
            axpy(1.0, gz, acc.blocks[b0 + 2]);
            matvec_transpose_acc(a->weights, gz, grad_prev);
        } else {
            const auto& fl = std::get<FactoredLayer>(layer);
            const Vector& aux = trace.aux[li];
            for (std::size_t i = 0; i < fl.branches.size(); ++i) {
                const double w = aux[i];
                if (w == 0.0) continue;  // inactive branch: exact zero gradient
                const Branch& br = fl.branches[i];
                const Vector& bout = trace.branch_outputs[li][i];
                Vector gz(grad.size());
                for (std::size_t k = 0; k < gz.size(); ++k)
                    gz[k] = grad[k] * w * activation_deriv_from_output(br.activation, bout[k]);
                outer_acc_into(acc.blocks[b0 + 2 * i], br.weights.rows, br.weights.cols, gz,
                               h_prev);
                axpy(1.0, gz, acc.blocks[b0 + 2 * i + 1]);
                matvec_transpose_acc(br.weights, gz, grad_prev);
            }
        }
        grad = std::move(grad_prev);
    }
}

Gradients backward(const Network& net, const ForwardTrace& trace,
                   std::span<const double> grad_out) {
    Gradients g = zero_gradients(net);
    backward_accumulate(net, trace, grad_out, g);
    return g;
}

std::string branch_label(const Network& net, std::size_t layer_index, std::size_t branch_index) {
    const auto* fl = std::get_if<FactoredLayer>(&net.layers.at(layer_index));
    if (!fl) throw InvalidState("branch_label: layer is not factored");
    if (branch_index >= fl->branches.size()) throw InvalidState("branch_label: branch out of range");
    const std::size_t count = fl->branches.size();
    if (branch_index + 1 == count) return "shared";
    const Placement where = placement_of(net, layer_index);
    const std::size_t m = static_cast<std::size_t>(net.emotions);
    if (is_pm_family(net.kind)) {
        // (emotion 1..M, speaker 1..N, shared)
        return branch_index < m ? "emotion_" + std::to_string(branch_index + 1)
                                : "speaker_" + std::to_string(branch_index - m + 1);
    }
    const bool speaker_first = (net.kind == ArchKind::sm_se || net.kind == ArchKind::sm_se_aim);
    const bool speaker_stage = (where == Placement::last_hidden) == speaker_first;
    return speaker_stage ? "speaker_" + std::to_string(branch_index + 1)
                         : "emotion_" + std::to_string(branch_index + 1);
}

std::vector<BlockInfo> param_layout(const Network& net) {
    std::vector<BlockInfo> layout;
    std::size_t offset = 0;
    auto push = [&](int layer, int branch, std::string label, bool bias, std::size_t rows,
                    std::size_t cols) {
        BlockInfo b;
        b.layer = layer;
        b.branch = branch;
        b.label = std::move(label);
        b.is_bias = bias;
        b.rows = rows;
        b.cols = cols;
        b.offset = offset;
        b.count = bias ? rows : rows * cols;
        offset += b.count;
        layout.push_back(std::move(b));
    };
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const int l = static_cast<int>(li);
        const Layer& layer = net.layers[li];
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            push(l, -1, "dense.W", false, d->weights.rows, d->weights.cols);
            push(l, -1, "dense.b", true, d->bias.size(), 0);
        } else if (auto* a = std::get_if<AugmentedInputLayer>(&layer)) {
            push(l, -1, "augmented.W", false, a->weights.rows, a->weights.cols);
            push(l, -1, "augmented.Wa", false, a->aux_weights.rows, a->aux_weights.cols);
            push(l, -1, "augmented.b", true, a->bias.size(), 0);
        } else {
            const auto& fl = std::get<FactoredLayer>(layer);
            for (std::size_t i = 0; i < fl.branches.size(); ++i) {
                const std::string name =
                    branch_label(net, li, i);
                push(l, static_cast<int>(i), "branch[" + name + "].W", false,
                     fl.branches[i].weights.rows, fl.branches[i].weights.cols);
                push(l, static_cast<int>(i), "branch[" + name + "].b", true,
                     fl.branches[i].bias.size(), 0);
            }
        }
    }
    return layout;
}

std::size_t param_count(const Network& net) {
    std::size_t n = 0;
    for_each_block(net, [&](std::span<const double> b) { n += b.size(); });
    return n;
}

Vector get_params(const Network& net) {
    Vector p;
    p.reserve(param_count(net));
    for_each_block(net, [&](std::span<const double> b) { p.insert(p.end(), b.begin(), b.end()); });
    return p;
}

void set_params(Network& net, std::span<const double> params) {
    if (params.size() != param_count(net)) throw ShapeError("set_params: size mismatch");
    std::size_t pos = 0;
    for_each_block(net, [&](std::span<double> b) {
        std::copy(params.begin() + pos, params.begin() + pos + b.size(), b.begin());
        pos += b.size();
    });
}

Vector flatten(const Network& net, const Gradients& grads) {
    Vector out;
    out.reserve(param_count(net));
    for (const Vector& b : grads.blocks) out.insert(out.end(), b.begin(), b.end());
    if (out.size() != param_count(net)) throw ShapeError("flatten: gradient shape mismatch");
    return out;
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::string join_int_list(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

void save_model(const Network& net, const std::string& path, const Vector& target_mean,
                const Vector& target_std) {
    if (target_mean.size() != target_std.size())
        throw ShapeError("save_model: mean/std length mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidConfig("cannot open model file for writing: " + path);
    os << "factts-model 1\n";
    os << "arch " << to_string(net.kind) << "\n";
    os << "input " << net.input_dim << "\n";
    os << "hidden " << join_int_list(net.hidden_dims) << "\n";
    os << "output " << net.output_dim << "\n";
    os << "emotions " << net.emotions << "\n";
    os << "speakers " << net.speakers << "\n";
    os << "seed " << net.init_seed << "\n";
    os << "norm_stats " << target_mean.size() << "\n";
    os << "end\n";
    for_each_block(net, [&](std::span<const double> b) { io::write_f64_le(os, b); });
    io::write_f64_le(os, target_mean);
    io::write_f64_le(os, target_std);
    if (!os) throw Error("write failure on model file: " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidConfig("cannot open model file: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "factts-model 1")
        throw InvalidConfig("not a factts model file: " + path);
    std::string arch, hidden;
    int input = 0, output = 0, emotions = 0, speakers = 0;
    std::uint64_t seed = 0;
    std::size_t n_stats = 0;
    while (std::getline(is, line) && line != "end") {
        std::stringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "arch") ss >> arch;
        else if (key == "input") ss >> input;
        else if (key == "hidden") ss >> hidden;
        else if (key == "output") ss >> output;
        else if (key == "emotions") ss >> emotions;
        else if (key == "speakers") ss >> speakers;
        else if (key == "seed") ss >> seed;
        else if (key == "norm_stats") ss >> n_stats;
        else throw InvalidConfig("unknown model header key: " + key);
    }
    if (line != "end") throw InvalidConfig("truncated model header: " + path);
    LoadedModel m;
    m.net = build_architecture(arch_from_string(arch), input, parse_int_list(hidden), output,
                               emotions, speakers, seed);
    for_each_block(m.net, [&](std::span<double> b) { io::read_f64_le(is, b); });
    m.target_mean.resize(n_stats);
    m.target_std.resize(n_stats);
    io::read_f64_le(is, m.target_mean);
    io::read_f64_le(is, m.target_std);
    return m;
}

}  // namespace factts
