#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "factts/errors.hpp"
#include "factts/training.hpp"
#include "testutil.hpp"

using namespace factts;

TEST_CASE("norm stats: sample mean, population standard deviation") {
    const NormStats st = compute_norm_stats({{0.0}, {2.0}});
    CHECK(st.mean == Vector{1.0});
    CHECK(st.std == Vector{1.0});

    CHECK_THROWS_AS(compute_norm_stats({{5.0}, {5.0}}), DegenerateDimension);
    CHECK_THROWS_AS(compute_norm_stats({{1.0}}), InvalidConfig);
}

TEST_CASE("normalize/denormalize round-trips") {
    Rng rng(15);
    std::vector<Vector> targets;
    for (int i = 0; i < 40; ++i) targets.push_back(testutil::random_vector(rng, 5, -4.0, 9.0));
    const NormStats st = compute_norm_stats(targets);
    for (const Vector& t : targets) {
        Vector v = t;
        normalize(st, v);
        denormalize(st, v);
        for (std::size_t k = 0; k < v.size(); ++k)
            CHECK(v[k] == doctest::Approx(t[k]).epsilon(1e-14));
    }
}

TEST_CASE("mse loss values and gradient") {
    CHECK(mse_loss(Vector{1.0, 1.0}, Vector{1.0, 1.0}) == 0.0);
    CHECK(mse_loss(Vector{0.0, 0.0}, Vector{3.0, 4.0}) == 12.5);
    CHECK_THROWS_AS(mse_loss(Vector{1.0}, Vector{1.0, 2.0}), ShapeError);

    // gradient against central differences
    Rng rng(3);
    const Vector pred = testutil::random_vector(rng, 6);
    const Vector target = testutil::random_vector(rng, 6);
    const Vector g = mse_loss_grad(pred, target);
    const double eps = 1e-6;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        Vector plus = pred, minus = pred;
        plus[k] += eps;
        minus[k] -= eps;
        const double fd = (mse_loss(plus, target) - mse_loss(minus, target)) / (2.0 * eps);
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("momentum sgd update rule") {
    Vector theta{0.0}, v{0.0};
    momentum_sgd_step(theta, Vector{1.0}, v, 0.1, 0.9);
    CHECK(v == Vector{-0.1});
    CHECK(theta == Vector{-0.1});

    momentum_sgd_step(theta, Vector{1.0}, v, 0.1, 0.9);
    CHECK(v[0] == doctest::Approx(-0.19).epsilon(1e-15));

    // zero momentum reduces to plain SGD
    Vector t2{1.0}, v2{0.0};
    momentum_sgd_step(t2, Vector{0.5}, v2, 0.2, 0.0);
    CHECK(t2[0] == doctest::Approx(1.0 - 0.2 * 0.5).epsilon(1e-15));

    Vector bad{std::nan("")};
    CHECK_THROWS_AS(momentum_sgd_step(t2, bad, v2, 0.1, 0.9), NumericalError);
    Vector wrong{1.0, 2.0};
    CHECK_THROWS_AS(momentum_sgd_step(t2, wrong, v2, 0.1, 0.9), ShapeError);
}

TEST_CASE("published training defaults") {
    CHECK(default_train_config(Task::duration, ArchKind::pm).learning_rate == 0.16);
    CHECK(default_train_config(Task::duration, ArchKind::aim).learning_rate == 0.08);
    CHECK(default_train_config(Task::duration, ArchKind::pm).minibatch_size == 64);
    CHECK(default_train_config(Task::duration, ArchKind::sed).minibatch_size == 16);
    CHECK(default_train_config(Task::acoustic, ArchKind::pm).learning_rate == 1.28);
    CHECK(default_train_config(Task::acoustic, ArchKind::sed).minibatch_size == 128);
    for (ArchKind k : testutil::all_archs()) {
        CHECK(default_train_config(Task::duration, k).momentum == 0.9);
        CHECK(default_train_config(Task::acoustic, k).momentum == 0.9);
    }
}

namespace {

SampleSet make_linear_set(Rng& rng, std::size_t n, const NormStats* apply_stats) {
    SampleSet set;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.x = {rng.uniform(-1.0, 1.0)};
        s.target = {2.0 * s.x[0]};
        if (apply_stats) normalize(*apply_stats, s.target);
        set.push_back(std::move(s));
    }
    return set;
}

Network linear_sed() {
    Network net = build_architecture(ArchKind::sed, 1, {4}, 1, 0, 1, 71);
    for (Layer& l : net.layers) std::get<DenseLayer>(l).activation = Activation::linear;
    ++net.revision;
    return net;
}

}  // namespace

TEST_CASE("training with zero epochs changes nothing") {
    Network net = linear_sed();
    const Vector before = get_params(net);
    Rng rng(1);
    SampleSet train_set = make_linear_set(rng, 32, nullptr);
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainReport rep = train(net, train_set, train_set, cfg, NormStats{{0.0}, {1.0}});
    CHECK(rep.train_mse.empty());
    CHECK(rep.valid_mse.empty());
    CHECK(get_params(net) == before);
}

TEST_CASE("linear regression reaches the least-squares optimum") {
    Rng rng(21);
    SampleSet raw = make_linear_set(rng, 256, nullptr);
    std::vector<Vector> targets;
    for (const Sample& s : raw) targets.push_back(s.target);
    const NormStats st = compute_norm_stats(targets);
    SampleSet train_set = raw;
    for (Sample& s : train_set) normalize(st, s.target);
    SampleSet valid_set(train_set.begin(), train_set.begin() + 32);

    // closed-form least squares on the design [x, 1], solved by hand
    double sxx = 0, sx = 0, sxy = 0, sy = 0;
    for (const Sample& s : train_set) {
        sxx += s.x[0] * s.x[0];
        sx += s.x[0];
        sxy += s.x[0] * s.target[0];
        sy += s.target[0];
    }
    const double n = static_cast<double>(train_set.size());
    const double det = sxx * n - sx * sx;
    const double w = (sxy * n - sx * sy) / det;
    const double b = (sxx * sy - sx * sxy) / det;
    double oracle_mse = 0.0;
    for (const Sample& s : train_set) {
        const double r = w * s.x[0] + b - s.target[0];
        oracle_mse += r * r;
    }
    oracle_mse /= n;
    CHECK(oracle_mse < 1e-20);  // noise-free linear data: exact fit exists

    Network net = linear_sed();
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.momentum = 0.9;
    cfg.minibatch_size = 16;
    cfg.epochs = 120;
    cfg.shuffle_seed = 5;
    train(net, train_set, valid_set, cfg, st);
    const double mse = evaluate_mse(net, train_set);
    CHECK(mse <= oracle_mse + 1e-6);
}

TEST_CASE("identical seeds give bitwise-identical loss curves") {
    auto run = [] {
        Rng rng(77);
        Network net = build_architecture(ArchKind::pm, 3, {4}, 2, 2, 2, 11);
        SampleSet set;
        for (int i = 0; i < 64; ++i) {
            Sample s;
            s.x = testutil::random_vector(rng, 3);
            s.speaker = 1 + static_cast<int>(rng.uniform_int(2));
            s.emotion = rng.uniform() < 0.4 ? EmotionIndex::neutral()
                                            : EmotionIndex::at(1 + static_cast<int>(
                                                                   rng.uniform_int(2)));
            s.target = testutil::random_vector(rng, 2);
            set.push_back(std::move(s));
        }
        TrainConfig cfg;
        cfg.learning_rate = 0.1;
        cfg.minibatch_size = 8;
        cfg.epochs = 6;
        cfg.shuffle_seed = 99;
        return train(net, set, set, cfg, NormStats{{0.0, 0.0}, {1.0, 1.0}});
    };
    const TrainReport a = run();
    const TrainReport b = run();
    CHECK(a.train_mse == b.train_mse);
    CHECK(a.valid_mse == b.valid_mse);
    CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("branches of unseen factors keep their initial parameters") {
    Network net = build_architecture(ArchKind::pm, 3, {4}, 2, 2, 3, 2025);
    const Vector before = get_params(net);

    Rng rng(31);
    SampleSet set;
    for (int i = 0; i < 48; ++i) {
        Sample s;
        s.x = testutil::random_vector(rng, 3);
        s.speaker = 1 + static_cast<int>(rng.uniform_int(2));  // speaker 3 never appears
        s.emotion = rng.uniform() < 0.5 ? EmotionIndex::neutral() : EmotionIndex::at(1);
        s.target = testutil::random_vector(rng, 2);            // emotion 2 never appears
        set.push_back(std::move(s));
    }
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.minibatch_size = 12;
    cfg.epochs = 4;
    train(net, set, set, cfg, NormStats{{0.0, 0.0}, {1.0, 1.0}});
    const Vector after = get_params(net);

    for (const BlockInfo& info : param_layout(net)) {
        const bool unseen = info.label.find("emotion_2") != std::string::npos ||
                            info.label.find("speaker_3") != std::string::npos;
        bool changed = false;
        for (std::size_t i = info.offset; i < info.offset + info.count; ++i)
            if (before[i] != after[i]) changed = true;
        if (unseen) {
            CHECK(!changed);
        } else if (info.label.find("shared") != std::string::npos) {
            CHECK(changed);
        }
    }
}

TEST_CASE("exploding training raises a numerical error naming the epoch") {
    Network net = linear_sed();
    Rng rng(41);
    SampleSet set = make_linear_set(rng, 32, nullptr);
    TrainConfig cfg;
    cfg.learning_rate = 1e155;
    cfg.minibatch_size = 8;
    cfg.epochs = 5;
    try {
        train(net, set, set, cfg, NormStats{{0.0}, {1.0}});
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("config validation") {
    Network net = linear_sed();
    Rng rng(5);
    SampleSet set = make_linear_set(rng, 8, nullptr);
    TrainConfig cfg;
    cfg.minibatch_size = 9;  // larger than the training set
    CHECK_THROWS_AS(train(net, set, set, cfg, NormStats{{0.0}, {1.0}}), InvalidConfig);
    cfg.minibatch_size = 4;
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(train(net, set, set, cfg, NormStats{{0.0}, {1.0}}), InvalidConfig);
}
