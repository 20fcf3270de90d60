#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "factts/corpus.hpp"
#include "factts/errors.hpp"
#include "factts/postproc.hpp"
#include "testutil.hpp"

using namespace factts;

namespace {

// Independent dense construction of the stacked window operator, straight
// from the window definitions with edge replication.
Matrix dense_window_oracle(int T) {
    Matrix W(static_cast<std::size_t>(3 * T), static_cast<std::size_t>(T));
    auto clampc = [&](int c) { return std::max(0, std::min(T - 1, c)); };
    for (int t = 0; t < T; ++t) {
        W.at(static_cast<std::size_t>(3 * t), static_cast<std::size_t>(t)) += 1.0;
        W.at(static_cast<std::size_t>(3 * t + 1), static_cast<std::size_t>(clampc(t - 1))) += -0.5;
        W.at(static_cast<std::size_t>(3 * t + 1), static_cast<std::size_t>(clampc(t + 1))) += 0.5;
        W.at(static_cast<std::size_t>(3 * t + 2), static_cast<std::size_t>(clampc(t - 1))) += 1.0;
        W.at(static_cast<std::size_t>(3 * t + 2), static_cast<std::size_t>(t)) += -2.0;
        W.at(static_cast<std::size_t>(3 * t + 2), static_cast<std::size_t>(clampc(t + 1))) += 1.0;
    }
    return W;
}

// Gaussian elimination with partial pivoting; test-only dense solver.
Vector dense_solve(Matrix a, Vector b) {
    const std::size_t n = a.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a.at(r, col)) > std::abs(a.at(piv, col))) piv = r;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a.at(col, c), a.at(piv, c));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) / a.at(col, col);
            for (std::size_t c = col; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
            b[r] -= f * b[col];
        }
    }
    Vector x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double v = b[i];
        for (std::size_t c = i + 1; c < n; ++c) v -= a.at(i, c) * x[c];
        x[i] = v / a.at(i, i);
    }
    return x;
}

// Normal-equations MLPG through the dense oracle path, one dimension.
Vector dense_mlpg_oracle(const Vector& means3T, const Vector& vars3T, int T) {
    const Matrix W = dense_window_oracle(T);
    Matrix A(static_cast<std::size_t>(T), static_cast<std::size_t>(T));
    Vector b(static_cast<std::size_t>(T), 0.0);
    for (std::size_t r = 0; r < W.rows; ++r) {
        const double inv = 1.0 / vars3T[r];
        for (std::size_t i = 0; i < W.cols; ++i) {
            if (W.at(r, i) == 0.0) continue;
            b[i] += W.at(r, i) * inv * means3T[r];
            for (std::size_t j = 0; j < W.cols; ++j)
                A.at(i, j) += W.at(r, i) * inv * W.at(r, j);
        }
    }
    return dense_solve(std::move(A), std::move(b));
}

TrajectoryDistribution random_distribution(Rng& rng, int T, int K) {
    TrajectoryDistribution d;
    d.means = Matrix(static_cast<std::size_t>(T), static_cast<std::size_t>(3 * K));
    d.variances = Matrix(static_cast<std::size_t>(T), static_cast<std::size_t>(3 * K));
    for (double& v : d.means.data) v = rng.uniform(-2.0, 2.0);
    for (double& v : d.variances.data) v = rng.uniform(0.2, 3.0);
    return d;
}

}  // namespace

TEST_CASE("window matrix boundary rows") {
    const WindowMatrix w1 = build_window_matrix(1);
    const Matrix d1 = w1.dense();
    CHECK(d1.at(0, 0) == 1.0);  // static
    CHECK(d1.at(1, 0) == 0.0);  // delta collapses under replication
    CHECK(d1.at(2, 0) == 0.0);  // delta-delta collapses

    const WindowMatrix w3 = build_window_matrix(3);
    const Matrix d3 = w3.dense();
    // delta row of the middle frame keeps the plain window
    CHECK(d3.at(4, 0) == -0.5);
    CHECK(d3.at(4, 1) == 0.0);
    CHECK(d3.at(4, 2) == 0.5);
}

TEST_CASE("window matrix reproduces the dynamic-feature operator exactly") {
    Rng rng(71);
    for (int T : {1, 2, 3, 7, 24}) {
        const int K = 3;
        Matrix statics(static_cast<std::size_t>(T), static_cast<std::size_t>(K));
        for (double& v : statics.data) v = rng.uniform(-3.0, 3.0);
        const Matrix dyn = append_dynamic_features(statics);
        const WindowMatrix w = build_window_matrix(T);
        for (int k = 0; k < K; ++k) {
            Vector col(static_cast<std::size_t>(T));
            for (int t = 0; t < T; ++t)
                col[static_cast<std::size_t>(t)] =
                    statics.at(static_cast<std::size_t>(t), static_cast<std::size_t>(k));
            const Vector y = w.apply(col);
            for (int t = 0; t < T; ++t) {
                CHECK(y[static_cast<std::size_t>(3 * t)] ==
                      dyn.at(static_cast<std::size_t>(t), static_cast<std::size_t>(k)));
                CHECK(y[static_cast<std::size_t>(3 * t + 1)] ==
                      dyn.at(static_cast<std::size_t>(t), static_cast<std::size_t>(K + k)));
                CHECK(y[static_cast<std::size_t>(3 * t + 2)] ==
                      dyn.at(static_cast<std::size_t>(t), static_cast<std::size_t>(2 * K + k)));
            }
        }
    }
}

TEST_CASE("mlpg recovers consistent inputs") {
    Rng rng(5150);
    const int T = 17, K = 2;
    Matrix target(static_cast<std::size_t>(T), static_cast<std::size_t>(K));
    for (double& v : target.data) v = rng.uniform(-2.0, 2.0);

    const WindowMatrix w = build_window_matrix(T);
    TrajectoryDistribution dist;
    dist.means = Matrix(static_cast<std::size_t>(T), static_cast<std::size_t>(3 * K));
    dist.variances = Matrix(static_cast<std::size_t>(T), static_cast<std::size_t>(3 * K));
    for (int k = 0; k < K; ++k) {
        Vector col(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t)
            col[static_cast<std::size_t>(t)] =
                target.at(static_cast<std::size_t>(t), static_cast<std::size_t>(k));
        const Vector y = w.apply(col);
        for (int t = 0; t < T; ++t) {
            dist.means.at(static_cast<std::size_t>(t), static_cast<std::size_t>(k)) =
                y[static_cast<std::size_t>(3 * t)];
            dist.means.at(static_cast<std::size_t>(t), static_cast<std::size_t>(K + k)) =
                y[static_cast<std::size_t>(3 * t + 1)];
            dist.means.at(static_cast<std::size_t>(t), static_cast<std::size_t>(2 * K + k)) =
                y[static_cast<std::size_t>(3 * t + 2)];
        }
    }
    for (double& v : dist.variances.data) v = rng.uniform(0.1, 4.0);

    const Matrix rec = mlpg(dist);
    double worst = 0.0;
    for (std::size_t i = 0; i < rec.data.size(); ++i)
        worst = std::max(worst, std::abs(rec.data[i] - target.data[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("mlpg with one frame returns the static mean") {
    TrajectoryDistribution dist;
    dist.means = Matrix(1, 3);
    dist.means.at(0, 0) = 2.5;   // static
    dist.means.at(0, 1) = 9.0;   // delta row has zero coefficients
    dist.means.at(0, 2) = -4.0;
    dist.variances = Matrix(1, 3, 1.3);
    const Matrix rec = mlpg(dist);
    CHECK(rec.at(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("banded solve matches the dense normal-equations oracle") {
    Rng rng(808);
    const int T = 10, K = 2;
    const TrajectoryDistribution dist = random_distribution(rng, T, K);
    const Matrix fast = mlpg(dist);
    for (int k = 0; k < K; ++k) {
        Vector means(static_cast<std::size_t>(3 * T)), vars(static_cast<std::size_t>(3 * T));
        for (int t = 0; t < T; ++t)
            for (int w = 0; w < 3; ++w) {
                means[static_cast<std::size_t>(3 * t + w)] =
                    dist.means.at(static_cast<std::size_t>(t),
                                  static_cast<std::size_t>(w * K + k));
                vars[static_cast<std::size_t>(3 * t + w)] =
                    dist.variances.at(static_cast<std::size_t>(t),
                                      static_cast<std::size_t>(w * K + k));
            }
        const Vector oracle = dense_mlpg_oracle(means, vars, T);
        for (int t = 0; t < T; ++t)
            CHECK(std::abs(fast.at(static_cast<std::size_t>(t), static_cast<std::size_t>(k)) -
                           oracle[static_cast<std::size_t>(t)]) < 1e-8);
    }
}

TEST_CASE("mlpg is invariant to uniform variance scaling") {
    Rng rng(31);
    const TrajectoryDistribution dist = random_distribution(rng, 14, 2);
    TrajectoryDistribution scaled = dist;
    for (double& v : scaled.variances.data) v *= 3.7;
    const Matrix a = mlpg(dist);
    const Matrix b = mlpg(scaled);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-9));
}

TEST_CASE("variance scaling hits the target variance and keeps the mean") {
    Rng rng(92);
    Matrix traj(40, 3);
    for (double& v : traj.data) v = rng.uniform(-1.0, 5.0);
    GlobalVariance gv{{4.0, 0.25, 1.7}};
    const Matrix out = variance_scaling(traj, gv);
    for (std::size_t k = 0; k < 3; ++k) {
        double mean_in = 0, mean_out = 0;
        for (std::size_t t = 0; t < 40; ++t) {
            mean_in += traj.at(t, k);
            mean_out += out.at(t, k);
        }
        mean_in /= 40;
        mean_out /= 40;
        CHECK(std::abs(mean_out - mean_in) < 1e-10);
        double var = 0;
        for (std::size_t t = 0; t < 40; ++t) {
            const double d = out.at(t, k) - mean_out;
            var += d * d;
        }
        var /= 40;
        CHECK(std::abs(var - gv.values[k]) < 1e-10 * gv.values[k]);
    }
}

TEST_CASE("variance scaling with the input's own variance is the identity") {
    Rng rng(17);
    Matrix traj(25, 2);
    for (double& v : traj.data) v = rng.uniform(-2.0, 2.0);
    std::vector<const Matrix*> one{&traj};
    const GlobalVariance gv = pooled_variance(one);
    const Matrix out = variance_scaling(traj, gv);
    CHECK(out.data == traj.data);
}

TEST_CASE("variance scaling rejects constant trajectories") {
    Matrix traj(10, 1, 3.25);
    CHECK_THROWS_AS(variance_scaling(traj, GlobalVariance{{1.0}}), DegenerateVariance);
    Matrix ok(10, 1);
    for (std::size_t t = 0; t < 10; ++t) ok.at(t, 0) = static_cast<double>(t);
    CHECK_THROWS_AS(variance_scaling(ok, GlobalVariance{{0.0}}), DegenerateVariance);
}

TEST_CASE("pooled variance pools frames across trajectories") {
    Matrix a(2, 1), b(2, 1);
    a.at(0, 0) = 0.0;
    a.at(1, 0) = 2.0;
    b.at(0, 0) = 0.0;
    b.at(1, 0) = 2.0;
    const GlobalVariance gv = pooled_variance({&a, &b});
    CHECK(gv.values[0] == doctest::Approx(1.0));  // mean 1, spread 1 over 4 frames
    Matrix c(3, 1, 5.0);
    CHECK_THROWS_AS(pooled_variance({&c}), DegenerateVariance);
}
