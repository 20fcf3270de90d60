#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <variant>

#include "factts/errors.hpp"
#include "factts/network.hpp"
#include "testutil.hpp"

using namespace factts;

namespace {

Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Branch const_branch(double value) {
    Branch b;
    b.weights = Matrix(1, 1, 0.0);
    b.bias = {value};
    b.activation = Activation::linear;
    return b;
}

}  // namespace

TEST_CASE("build_architecture topologies match the published layouts") {
    // duration-model parallel architecture: 298 -> 32 -> 32 -> 1*(16+2+1)
    Network pm = build_architecture(ArchKind::pm, 298, {32, 32}, 1, 2, 16, 1);
    REQUIRE(pm.layers.size() == 3);
    const auto& out = std::get<FactoredLayer>(pm.layers[2]);
    CHECK(out.branches.size() == 19);
    for (const Branch& b : out.branches) {
        CHECK(b.weights.rows == 1);
        CHECK(b.weights.cols == 32);
        CHECK(b.activation == Activation::linear);
    }
    CHECK(std::holds_alternative<DenseLayer>(pm.layers[0]));
    CHECK(std::holds_alternative<DenseLayer>(pm.layers[1]));

    // aux-input model consumes a 316-dimensional input (298 + 16 + 2)
    Network aim = build_architecture(ArchKind::aim, 298, {64, 64}, 1, 2, 16, 1);
    const auto& in = std::get<AugmentedInputLayer>(aim.layers[0]);
    CHECK(in.weights.cols + in.aux_weights.cols == 316);
    CHECK(std::holds_alternative<DenseLayer>(aim.layers[2]));

    // plain per-cell baseline: no aux anywhere
    Network sed = build_architecture(ArchKind::sed, 305, {256, 256, 256}, 154, 0, 1, 1);
    REQUIRE(sed.layers.size() == 4);
    for (const Layer& l : sed.layers) CHECK(std::holds_alternative<DenseLayer>(l));

    // serial: factored last hidden and factored output
    Network sm = build_architecture(ArchKind::sm_se, 298, {32, 32}, 1, 2, 16, 1);
    CHECK(std::get<FactoredLayer>(sm.layers[1]).branches.size() == 17);  // 16 speakers + shared
    CHECK(std::get<FactoredLayer>(sm.layers[2]).branches.size() == 3);   // 2 emotions + shared

    CHECK_THROWS_AS(build_architecture(ArchKind::pm, 10, {}, 1, 2, 4, 1), InvalidTopology);
    CHECK_THROWS_AS(build_architecture(ArchKind::sm_se_aim, 10, {8}, 1, 2, 4, 1),
                    InvalidTopology);
    CHECK_THROWS_AS(build_architecture(ArchKind::pm, 10, {8}, 1, -1, 4, 1), InvalidTopology);
    CHECK_THROWS_AS(build_architecture(ArchKind::pm, 10, {8}, 1, 2, 0, 1), InvalidTopology);
}

TEST_CASE("forward_dense basics") {
    DenseLayer l;
    l.weights = identity(2);
    l.bias = {0.0, 0.0};
    l.activation = Activation::linear;
    CHECK(forward_dense(l, Vector{1.0, 2.0}) == Vector{1.0, 2.0});

    DenseLayer bias_only;
    bias_only.weights = Matrix(1, 2, 0.0);
    bias_only.bias = {3.0};
    bias_only.activation = Activation::linear;
    CHECK(forward_dense(bias_only, Vector{5.0, -7.0}) == Vector{3.0});

    DenseLayer sig;
    sig.weights = Matrix(1, 1, 1.0);
    sig.bias = {0.0};
    sig.activation = Activation::sigmoid;
    CHECK(forward_dense(sig, Vector{0.0}) == Vector{0.5});

    CHECK_THROWS_AS(forward_dense(sig, Vector{1.0, 2.0}), ShapeError);
}

TEST_CASE("forward_augmented basics") {
    AugmentedInputLayer l;
    l.weights = Matrix(2, 3);
    l.aux_weights = identity(2);
    l.bias = {0.0, 0.0};
    l.activation = Activation::linear;
    Rng rng(3);
    for (double& w : l.weights.data) w = rng.uniform(-1.0, 1.0);
    const Vector h = testutil::random_vector(rng, 3);

    // zero aux contributes nothing: identical to the dense computation
    DenseLayer base{l.weights, l.bias, l.activation};
    CHECK(forward_augmented(l, h, AuxVector{{0.0, 0.0}, Placement::input}) ==
          forward_dense(base, h));

    // aux pass-through when the base path is severed
    AugmentedInputLayer pass;
    pass.weights = Matrix(2, 3, 0.0);
    pass.aux_weights = identity(2);
    pass.bias = {0.0, 0.0};
    pass.activation = Activation::linear;
    CHECK(forward_augmented(pass, h, AuxVector{{1.0, 0.0}, Placement::input}) ==
          Vector{1.0, 0.0});

    // two one-hot aux vectors differ by a column of Wa
    const Vector y0 = forward_augmented(l, h, AuxVector{{1.0, 0.0}, Placement::input});
    const Vector y1 = forward_augmented(l, h, AuxVector{{0.0, 1.0}, Placement::input});
    for (std::size_t r = 0; r < 2; ++r)
        CHECK(y0[r] - y1[r] ==
              doctest::Approx(l.aux_weights.at(r, 0) - l.aux_weights.at(r, 1)).epsilon(1e-12));

    CHECK_THROWS_AS(forward_augmented(l, h, AuxVector{{1.0}, Placement::input}), ShapeError);
}

TEST_CASE("forward_factored weighted branch sums") {
    FactoredLayer l;
    l.branches = {const_branch(2.0), const_branch(5.0), const_branch(1.0)};
    const Vector h{0.0};
    CHECK(forward_factored(l, h, AuxVector{{1.0, 0.0, 1.0}, Placement::output}) == Vector{3.0});
    CHECK(forward_factored(l, h, AuxVector{{0.5, 0.5, 1.0}, Placement::output}) == Vector{4.5});
    CHECK_THROWS_AS(forward_factored(l, h, AuxVector{{1.0, 0.0}, Placement::output}),
                    ShapeError);
}

TEST_CASE("neutral emotion activates only speaker and shared branches") {
    Network pm = build_architecture(ArchKind::pm, 4, {3}, 2, 2, 3, 77);
    const auto& out = std::get<FactoredLayer>(pm.layers[1]);
    Rng rng(8);
    const Vector h = testutil::random_vector(rng, 3);
    const EmotionId e = emotion_id(EmotionIndex::neutral(), 2);
    const SpeakerId s = speaker_id(2, 3);
    const AuxVector aux = layer_aux(ArchKind::pm, Placement::output, e, s);

    const Vector got = forward_factored(out, h, aux);
    // isolated: speaker branch (index M + j - 1 = 3) + shared branch (last)
    const Vector sp = forward_dense(DenseLayer{out.branches[3].weights, out.branches[3].bias,
                                               out.branches[3].activation},
                                    h);
    const Vector sh = forward_dense(DenseLayer{out.branches[5].weights, out.branches[5].bias,
                                               out.branches[5].activation},
                                    h);
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == sp[k] + sh[k]);
}

TEST_CASE("branch-selection equivalence is bitwise for one-hot aux") {
    Rng rng(404);
    Network pm = build_architecture(ArchKind::pm, 5, {4}, 3, 2, 3, 9);
    const auto& out = std::get<FactoredLayer>(pm.layers[1]);
    for (int rep = 0; rep < 100; ++rep) {
        const Vector h = testutil::random_vector(rng, 4);
        const int i = 1 + static_cast<int>(rng.uniform_int(2));
        const int j = 1 + static_cast<int>(rng.uniform_int(3));
        const AuxVector aux = layer_aux(ArchKind::pm, Placement::output,
                                        emotion_id(EmotionIndex::at(i), 2), speaker_id(j, 3));
        const Vector got = forward_factored(out, h, aux);

        auto eval = [&](std::size_t b) {
            return forward_dense(DenseLayer{out.branches[b].weights, out.branches[b].bias,
                                            out.branches[b].activation},
                                 h);
        };
        const Vector be = eval(static_cast<std::size_t>(i - 1));
        const Vector bs = eval(static_cast<std::size_t>(2 + j - 1));
        const Vector bsh = eval(5);
        for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == be[k] + bs[k] + bsh[k]);
    }
}

TEST_CASE("aux-linearity at a linear output layer") {
    Rng rng(2024);
    Network pm = build_architecture(ArchKind::pm, 5, {4}, 3, 2, 2, 13);
    const auto& out = std::get<FactoredLayer>(pm.layers[1]);
    const Vector h = testutil::random_vector(rng, 4);
    for (int rep = 0; rep < 20; ++rep) {
        const Vector u = testutil::random_vector(rng, 5);
        const Vector v = testutil::random_vector(rng, 5);
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        Vector mix(5);
        for (std::size_t i = 0; i < 5; ++i) mix[i] = a * u[i] + b * v[i];
        const Vector yu = forward_factored(out, h, AuxVector{u, Placement::output});
        const Vector yv = forward_factored(out, h, AuxVector{v, Placement::output});
        const Vector ym = forward_factored(out, h, AuxVector{mix, Placement::output});
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(ym[k] == doctest::Approx(a * yu[k] + b * yv[k]).epsilon(1e-11));
    }
}

TEST_CASE("full forward: sed ignores the factor pair") {
    Network sed = build_architecture(ArchKind::sed, 6, {5}, 2, 2, 3, 42);
    Rng rng(1);
    const Vector x = testutil::random_vector(rng, 6);
    const Vector y1 = forward(sed, x, emotion_id(EmotionIndex::at(1), 2), speaker_id(1, 3));
    const Vector y2 = forward(sed, x, emotion_id(EmotionIndex::neutral(), 2), speaker_id(3, 3));
    CHECK(y1 == y2);
}

TEST_CASE("full forward: parallel-model bias propagation with zero weights") {
    Network pm = build_architecture(ArchKind::pm, 4, {3}, 1, 2, 3, 5);
    Vector zeros(param_count(pm), 0.0);
    set_params(pm, zeros);
    auto& out = std::get<FactoredLayer>(pm.layers[1]);
    out.branches[0].bias = {0.25};  // emotion 1
    out.branches[3].bias = {0.5};   // speaker 2
    out.branches[5].bias = {4.0};   // shared
    ++pm.revision;

    const Vector y =
        forward(pm, Vector{1.0, 2.0, 3.0, 4.0}, emotion_id(EmotionIndex::at(1), 2),
                speaker_id(2, 3));
    CHECK(y == Vector{0.25 + 0.5 + 4.0});
}

TEST_CASE("full forward: aim with severed aux path ignores the factors") {
    Network aim = build_architecture(ArchKind::aim, 5, {4, 4}, 2, 2, 3, 17);
    auto& in = std::get<AugmentedInputLayer>(aim.layers[0]);
    std::fill(in.aux_weights.data.begin(), in.aux_weights.data.end(), 0.0);
    ++aim.revision;
    Rng rng(2);
    const Vector x = testutil::random_vector(rng, 5);
    const Vector y1 = forward(aim, x, emotion_id(EmotionIndex::at(2), 2), speaker_id(1, 3));
    const Vector y2 = forward(aim, x, emotion_id(EmotionIndex::neutral(), 2), speaker_id(3, 3));
    CHECK(y1 == y2);
}

TEST_CASE("parallel model with only a shared branch reduces to the plain stack") {
    const std::uint64_t seed = 99;
    Network sed = build_architecture(ArchKind::sed, 5, {4}, 2, 0, 1, seed);

    Network pm;
    pm.kind = ArchKind::pm;
    pm.input_dim = 5;
    pm.hidden_dims = {4};
    pm.output_dim = 2;
    pm.emotions = 0;
    pm.speakers = 0;
    pm.layers.push_back(std::get<DenseLayer>(sed.layers[0]));
    FactoredLayer out;
    const auto& sed_out = std::get<DenseLayer>(sed.layers[1]);
    out.branches.push_back(Branch{sed_out.weights, sed_out.bias, sed_out.activation});
    pm.layers.emplace_back(std::move(out));

    Rng rng(6);
    for (int rep = 0; rep < 10; ++rep) {
        const Vector x = testutil::random_vector(rng, 5);
        const Vector ysed =
            forward(sed, x, emotion_id(EmotionIndex::neutral(), 0), speaker_id(1, 1));
        const Vector ypm = forward(pm, x, EmotionId{}, SpeakerId{});
        CHECK(ysed == ypm);
    }
}

TEST_CASE("gradients: inactive branches get exactly zero, shared branch never does") {
    Network pm = build_architecture(ArchKind::pm, 7, {5, 4}, 3, 2, 3, 2024);
    Rng rng(55);
    const Vector x = testutil::random_vector(rng, 7);
    const EmotionId e = emotion_id(EmotionIndex::at(1), 2);
    const SpeakerId s = speaker_id(2, 3);
    const ForwardTrace tr = forward_trace(pm, x, e, s);
    const Vector gout = testutil::random_vector(rng, 3);
    const Gradients g = backward(pm, tr, gout);

    const auto layout = param_layout(pm);
    std::size_t block = 0;
    bool saw_shared = false;
    for (const BlockInfo& info : layout) {
        const Vector& gb = g.blocks[block++];
        if (info.branch < 0) continue;
        const std::string label = info.label;
        const bool active = label.find("emotion_1") != std::string::npos ||
                            label.find("speaker_2") != std::string::npos ||
                            label.find("shared") != std::string::npos;
        if (!active) {
            for (double v : gb) CHECK(v == 0.0);
        }
        if (label.find("shared") != std::string::npos && !info.is_bias) {
            double norm = 0.0;
            for (double v : gb) norm += v * v;
            CHECK(norm > 0.0);
            saw_shared = true;
        }
    }
    CHECK(saw_shared);
}

TEST_CASE("backpropagation matches central finite differences for every architecture") {
    Rng rng(777);
    for (ArchKind kind : testutil::all_archs()) {
        CAPTURE(to_string(kind));
        Network net = build_architecture(kind, 7, {5, 4}, 3, 2, 3, 31337);
        const Vector x = testutil::random_vector(rng, 7);
        const Vector coeffs = testutil::random_vector(rng, 3);
        for (bool neutral : {false, true}) {
            const EmotionId e =
                emotion_id(neutral ? EmotionIndex::neutral() : EmotionIndex::at(2), 2);
            const SpeakerId s = speaker_id(3, 3);
            const auto res = testutil::gradient_check(net, x, e, s, coeffs);
            CHECK(res.max_rel_error < 1e-5);
        }
    }
}

TEST_CASE("identical seeds give bitwise-identical parameters and outputs") {
    for (ArchKind kind : testutil::all_archs()) {
        Network a = build_architecture(kind, 6, {5, 4}, 2, 2, 3, 123456);
        Network b = build_architecture(kind, 6, {5, 4}, 2, 2, 3, 123456);
        CHECK(get_params(a) == get_params(b));
        Rng rng(4);
        const Vector x = testutil::random_vector(rng, 6);
        CHECK(forward(a, x, emotion_id(EmotionIndex::at(1), 2), speaker_id(2, 3)) ==
              forward(b, x, emotion_id(EmotionIndex::at(1), 2), speaker_id(2, 3)));
    }
}

TEST_CASE("stale traces are rejected") {
    Network net = build_architecture(ArchKind::pm, 4, {3}, 2, 1, 2, 8);
    Rng rng(9);
    const Vector x = testutil::random_vector(rng, 4);
    const EmotionId e = emotion_id(EmotionIndex::at(1), 1);
    const SpeakerId s = speaker_id(1, 2);
    const ForwardTrace tr = forward_trace(net, x, e, s);
    Vector p = get_params(net);
    set_params(net, p);  // bumps the revision even if values are unchanged
    CHECK_THROWS_AS(backward(net, tr, Vector{1.0, 0.0}), InvalidState);
}

TEST_CASE("model files round-trip bit-exactly") {
    const std::string path = "test_model_roundtrip.bin";
    for (ArchKind kind : {ArchKind::pm, ArchKind::sm_es_aim, ArchKind::sed}) {
        Network net = build_architecture(kind, 9, {6, 5}, 4, 2, 3, 20200321);
        const Vector mean{0.5, -1.25, 3.0, 0x1.fffffffffffffp-1};
        const Vector std{1.0, 0.25, 2.0, 0x1.0000000000001p0};
        save_model(net, path, mean, std);
        const LoadedModel m = load_model(path);
        CHECK(m.net.kind == kind);
        CHECK(get_params(m.net) == get_params(net));
        CHECK(m.target_mean == mean);
        CHECK(m.target_std == std);
        Rng rng(12);
        const Vector x = testutil::random_vector(rng, 9);
        CHECK(forward(m.net, x, emotion_id(EmotionIndex::at(2), 2), speaker_id(1, 3)) ==
              forward(net, x, emotion_id(EmotionIndex::at(2), 2), speaker_id(1, 3)));
    }
    std::remove(path.c_str());
}
