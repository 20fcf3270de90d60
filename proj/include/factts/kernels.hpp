#pragma once

#include <cstddef>
#include <string>

namespace factts::kernels {

// Data-parallel inner-loop primitives. Every op has a scalar reference
// implementation and, on x86-64 with AVX2+FMA, a vectorized variant. The
// active backend is chosen once at first use (or forced via set_backend /
// the FACTTS_KERNELS env var) and then never changes, so all results within
// a process are reproducible. Scalar and SIMD variants are equivalence-
// tested against each other in tests/test_kernels.cpp.

enum class Backend { auto_detect, scalar, avx2 };

struct Ops {
    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x[i] *= alpha
    void (*scal)(double alpha, double* x, std::size_t n);
};

// Currently active op table.
const Ops& active();

// Force a backend (tests use this to compare variants). Throws InvalidConfig
// if the requested backend is unavailable on this CPU.
void set_backend(Backend b);

// Name of the active backend: "scalar" or "avx2".
std::string backend_name();

// True if the CPU and build support the AVX2 variant.
bool avx2_available();

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when unavailable

}  // namespace factts::kernels
