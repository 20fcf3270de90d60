#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "factts/errors.hpp"
#include "factts/kernels.hpp"

namespace factts {

using Vector = std::vector<double>;

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }
};

// y = M x
inline void matvec(const Matrix& m, std::span<const double> x, std::span<double> y) {
    if (x.size() != m.cols || y.size() != m.rows)
        throw ShapeError("matvec: dimension mismatch");
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < m.rows; ++r) y[r] = k.dot(m.row(r), x.data(), m.cols);
}

// y += M^T g  (used for gradient propagation through a weight matrix)
inline void matvec_transpose_acc(const Matrix& m, std::span<const double> g,
                                 std::span<double> y) {
    if (g.size() != m.rows || y.size() != m.cols)
        throw ShapeError("matvec_transpose_acc: dimension mismatch");
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < m.rows; ++r) k.axpy(g[r], m.row(r), y.data(), m.cols);
}

// M += g h^T  (rank-1 gradient accumulation)
inline void outer_acc(Matrix& m, std::span<const double> g, std::span<const double> h) {
    if (g.size() != m.rows || h.size() != m.cols)
        throw ShapeError("outer_acc: dimension mismatch");
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < m.rows; ++r) k.axpy(g[r], h.data(), m.row(r), m.cols);
}

// Same rank-1 accumulation into a flat row-major block.
inline void outer_acc_into(std::span<double> block, std::size_t rows, std::size_t cols,
                           std::span<const double> g, std::span<const double> h) {
    if (g.size() != rows || h.size() != cols || block.size() != rows * cols)
        throw ShapeError("outer_acc_into: dimension mismatch");
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < rows; ++r) k.axpy(g[r], h.data(), block.data() + r * cols, cols);
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw ShapeError("axpy: dimension mismatch");
    kernels::active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scal(double alpha, std::span<double> x) {
    kernels::active().scal(alpha, x.data(), x.size());
}

}  // namespace factts
