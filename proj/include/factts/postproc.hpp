#pragma once

#include <array>
#include <vector>

#include "factts/linalg.hpp"

namespace factts {

// Delta windows over (t-1, t, t+1); defaults match the dynamic-feature
// definition used when building training targets.
struct DeltaWindows {
    std::array<double, 3> delta{-0.5, 0.0, 0.5};
    std::array<double, 3> accel{1.0, -2.0, 1.0};
};

// The stacked static/delta/delta-delta window operator for one dimension:
// a 3T x T banded matrix with rows interleaved per frame as
// (static_t, delta_t, deltadelta_t). Boundary rows fold the out-of-range
// column onto the edge frame (edge replication).
struct WindowMatrix {
    int frames = 0;
    DeltaWindows windows;
    std::vector<std::array<double, 3>> delta;       // folded (prev, center, next) per frame
    std::vector<std::array<double, 3>> deltadelta;

    // y = W c for a single-dimension static trajectory c (length T); returns
    // the interleaved 3T vector. Evaluates the raw windows over clamped
    // indices so the result is bit-identical to the dynamic-feature
    // computation on training targets.
    Vector apply(std::span<const double> statics) const;

    // Dense materialization, mainly for oracles and debugging.
    Matrix dense() const;
};

WindowMatrix build_window_matrix(int frames, const DeltaWindows& windows = {});

// Predicted per-frame means and diagonal variances of the static+dynamic
// features: T x 3K each, columns grouped [static | delta | delta-delta].
struct TrajectoryDistribution {
    Matrix means;
    Matrix variances;
};

// Maximum-likelihood static trajectory: per dimension solves
// (W^T U^-1 W) c = W^T U^-1 m with a banded Cholesky factorization
// (half-bandwidth 2). Returns T x K.
Matrix mlpg(const TrajectoryDistribution& dist, const DeltaWindows& windows = {});

// Per-static-dimension target temporal variance.
struct GlobalVariance {
    Vector values;
};

// Pooled per-column population variance over the rows of several
// trajectories. Throws DegenerateVariance if a column is constant.
GlobalVariance pooled_variance(const std::vector<const Matrix*>& trajectories);

// Affine per-dimension rescaling so the output temporal variance equals the
// target; the temporal mean is preserved. A dimension whose scale factor is
// exactly 1 is passed through unchanged.
Matrix variance_scaling(const Matrix& trajectory, const GlobalVariance& gv);

}  // namespace factts
