#include "factts/postproc.hpp"

#include <cmath>

#include "factts/errors.hpp"

namespace factts {

namespace {

// Fold an (prev, center, next) window at the trajectory edges: coefficients
// that would fall outside [0, T) are added onto the edge frame, matching
// edge replication in the dynamic-feature computation.
std::array<double, 3> folded(const std::array<double, 3>& w, int t, int T) {
    std::array<double, 3> c = w;
    if (t == 0) {
        c[1] += c[0];
        c[0] = 0.0;
    }
    if (t == T - 1) {
        c[1] += c[2];
        c[2] = 0.0;
    }
    return c;
}

}  // namespace

WindowMatrix build_window_matrix(int frames, const DeltaWindows& windows) {
    if (frames < 1) throw EmptyInput("build_window_matrix: need at least one frame");
    WindowMatrix w;
    w.frames = frames;
    w.windows = windows;
    w.delta.reserve(static_cast<std::size_t>(frames));
    w.deltadelta.reserve(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        w.delta.push_back(folded(windows.delta, t, frames));
        w.deltadelta.push_back(folded(windows.accel, t, frames));
    }
    return w;
}

Vector WindowMatrix::apply(std::span<const double> statics) const {
    if (static_cast<int>(statics.size()) != frames)
        throw ShapeError("WindowMatrix::apply: trajectory length mismatch");
    Vector out(static_cast<std::size_t>(3 * frames), 0.0);
    auto clamped = [&](int c) {
        return statics[static_cast<std::size_t>(std::clamp(c, 0, frames - 1))];
    };
    for (int t = 0; t < frames; ++t) {
        const double xm = clamped(t - 1), x0 = clamped(t), xp = clamped(t + 1);
        out[static_cast<std::size_t>(3 * t)] = x0;
        out[static_cast<std::size_t>(3 * t + 1)] =
            windows.delta[0] * xm + windows.delta[1] * x0 + windows.delta[2] * xp;
        out[static_cast<std::size_t>(3 * t + 2)] =
            windows.accel[0] * xm + windows.accel[1] * x0 + windows.accel[2] * xp;
    }
    return out;
}

Matrix WindowMatrix::dense() const {
    Matrix m(static_cast<std::size_t>(3 * frames), static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        m.at(static_cast<std::size_t>(3 * t), static_cast<std::size_t>(t)) = 1.0;
        for (int kind = 0; kind < 2; ++kind) {
            const auto& c = kind == 0 ? delta[static_cast<std::size_t>(t)]
                                      : deltadelta[static_cast<std::size_t>(t)];
            for (int j = -1; j <= 1; ++j) {
                const int col = t + j;
                if (col < 0 || col >= frames) continue;
                m.at(static_cast<std::size_t>(3 * t + 1 + kind), static_cast<std::size_t>(col)) =
                    c[static_cast<std::size_t>(j + 1)];
            }
        }
    }
    return m;
}

namespace {

// Symmetric positive-definite band matrix, half-bandwidth 2, stored as the
// diagonal plus two superdiagonals: band[d][t] = A[t][t+d].
struct Band {
    int n = 0;
    std::array<Vector, 3> rows;

    explicit Band(int size) : n(size) {
        for (auto& r : rows) r.assign(static_cast<std::size_t>(size), 0.0);
    }

    double& at(int i, int j) {  // requires i <= j <= i+2
        return rows[static_cast<std::size_t>(j - i)][static_cast<std::size_t>(i)];
    }
    double at(int i, int j) const {
        return rows[static_cast<std::size_t>(j - i)][static_cast<std::size_t>(i)];
    }
};

void accumulate_row(Band& a, Vector& b, int t, const std::array<double, 3>& coefs,
                    double inv_var, double mean, int T) {
    for (int i = -1; i <= 1; ++i) {
        const double ci = coefs[static_cast<std::size_t>(i + 1)];
        const int row = t + i;
        if (ci == 0.0 || row < 0 || row >= T) continue;
        b[static_cast<std::size_t>(row)] += ci * inv_var * mean;
        for (int j = i; j <= 1; ++j) {
            const double cj = coefs[static_cast<std::size_t>(j + 1)];
            const int col = t + j;
            if (cj == 0.0 || col < 0 || col >= T) continue;
            a.at(row, col) += ci * inv_var * cj;
        }
    }
}

// In-place banded Cholesky A = L L^T followed by the two triangular solves.
Vector banded_spd_solve(Band& a, Vector b) {
    const int n = a.n;
    for (int t = 0; t < n; ++t) {
        double d = a.at(t, t);
        for (int j = std::max(0, t - 2); j < t; ++j) {
            const double l = a.at(j, t);  // holds L[t][j] after factorization of column j
            d -= l * l;
        }
        if (!(d > 0.0)) throw NumericalError("MLPG normal equations are not positive definite");
        const double diag = std::sqrt(d);
        a.at(t, t) = diag;
        for (int i = t + 1; i <= std::min(n - 1, t + 2); ++i) {
            double v = a.at(t, i);
            for (int j = std::max(0, i - 2); j < t; ++j)
                if (j >= i - 2 && j >= t - 2) v -= a.at(j, i) * a.at(j, t);
            a.at(t, i) = v / diag;  // L[i][t] stored at the symmetric slot
        }
    }
    // forward solve L y = b
    for (int i = 0; i < n; ++i) {
        double v = b[static_cast<std::size_t>(i)];
        for (int j = std::max(0, i - 2); j < i; ++j) v -= a.at(j, i) * b[static_cast<std::size_t>(j)];
        b[static_cast<std::size_t>(i)] = v / a.at(i, i);
    }
    // backward solve L^T c = y
    for (int i = n - 1; i >= 0; --i) {
        double v = b[static_cast<std::size_t>(i)];
        for (int j = i + 1; j <= std::min(n - 1, i + 2); ++j)
            v -= a.at(i, j) * b[static_cast<std::size_t>(j)];
        b[static_cast<std::size_t>(i)] = v / a.at(i, i);
    }
    return b;
}

}  // namespace

Matrix mlpg(const TrajectoryDistribution& dist, const DeltaWindows& windows) {
    const std::size_t T = dist.means.rows;
    if (T < 1) throw EmptyInput("mlpg: empty distribution");
    if (dist.means.cols % 3 != 0 || dist.means.cols == 0)
        throw ShapeError("mlpg: mean columns must group as [static|delta|delta-delta]");
    if (dist.variances.rows != T || dist.variances.cols != dist.means.cols)
        throw ShapeError("mlpg: variance shape mismatch");
    const std::size_t K = dist.means.cols / 3;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < dist.variances.cols; ++c)
            if (!(dist.variances.at(t, c) > 0.0))
                throw ShapeError("mlpg: variances must be strictly positive");

    const WindowMatrix w = build_window_matrix(static_cast<int>(T), windows);
    const std::array<double, 3> static_row{0.0, 1.0, 0.0};

    Matrix out(T, K);
    for (std::size_t k = 0; k < K; ++k) {
        Band a(static_cast<int>(T));
        Vector b(T, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            accumulate_row(a, b, static_cast<int>(t), static_row,
                           1.0 / dist.variances.at(t, k), dist.means.at(t, k),
                           static_cast<int>(T));
            accumulate_row(a, b, static_cast<int>(t), w.delta[t],
                           1.0 / dist.variances.at(t, K + k), dist.means.at(t, K + k),
                           static_cast<int>(T));
            accumulate_row(a, b, static_cast<int>(t), w.deltadelta[t],
                           1.0 / dist.variances.at(t, 2 * K + k), dist.means.at(t, 2 * K + k),
                           static_cast<int>(T));
        }
        const Vector c = banded_spd_solve(a, std::move(b));
        for (std::size_t t = 0; t < T; ++t) out.at(t, k) = c[t];
    }
    return out;
}

GlobalVariance pooled_variance(const std::vector<const Matrix*>& trajectories) {
    if (trajectories.empty()) throw EmptyInput("pooled_variance: no trajectories");
    const std::size_t K = trajectories.front()->cols;
    std::size_t n = 0;
    Vector mean(K, 0.0);
    for (const Matrix* m : trajectories) {
        if (m->cols != K) throw ShapeError("pooled_variance: column mismatch");
        for (std::size_t t = 0; t < m->rows; ++t)
            for (std::size_t k = 0; k < K; ++k) mean[k] += m->at(t, k);
        n += m->rows;
    }
    if (n == 0) throw EmptyInput("pooled_variance: no frames");
    for (double& v : mean) v /= static_cast<double>(n);
    GlobalVariance gv;
    gv.values.assign(K, 0.0);
    for (const Matrix* m : trajectories)
        for (std::size_t t = 0; t < m->rows; ++t)
            for (std::size_t k = 0; k < K; ++k) {
                const double d = m->at(t, k) - mean[k];
                gv.values[k] += d * d;
            }
    for (std::size_t k = 0; k < K; ++k) {
        gv.values[k] /= static_cast<double>(n);
        if (gv.values[k] == 0.0)
            throw DegenerateVariance("pooled_variance: dimension " + std::to_string(k) +
                                     " is constant");
    }
    return gv;
}

Matrix variance_scaling(const Matrix& trajectory, const GlobalVariance& gv) {
    const std::size_t T = trajectory.rows;
    const std::size_t K = trajectory.cols;
    if (T == 0) throw EmptyInput("variance_scaling: empty trajectory");
    if (gv.values.size() != K) throw ShapeError("variance_scaling: dimension mismatch");
    for (double v : gv.values)
        if (!(v > 0.0)) throw DegenerateVariance("variance_scaling: non-positive target");

    Matrix out(T, K);
    for (std::size_t k = 0; k < K; ++k) {
        double mean = 0.0;
        for (std::size_t t = 0; t < T; ++t) mean += trajectory.at(t, k);
        mean /= static_cast<double>(T);
        double var = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double d = trajectory.at(t, k) - mean;
            var += d * d;
        }
        var /= static_cast<double>(T);
        if (var == 0.0)
            throw DegenerateVariance("variance_scaling: input dimension " + std::to_string(k) +
                                     " is constant");
        const double scale = std::sqrt(gv.values[k] / var);
        for (std::size_t t = 0; t < T; ++t)
            out.at(t, k) = scale == 1.0 ? trajectory.at(t, k)
                                        : scale * (trajectory.at(t, k) - mean) + mean;
    }
    return out;
}

}  // namespace factts
