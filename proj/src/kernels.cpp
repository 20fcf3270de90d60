#include "factts/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "factts/errors.hpp"

namespace factts::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

const Ops kScalarOps{dot_scalar, axpy_scalar, scal_scalar};

struct State {
    const Ops* ops;
    const char* name;
};

State detect() {
    const char* env = std::getenv("FACTTS_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return {&kScalarOps, "scalar"};
        if (std::strcmp(env, "avx2") == 0) {
            if (const Ops* v = avx2_ops()) return {v, "avx2"};
            throw InvalidConfig("FACTTS_KERNELS=avx2 but AVX2 is unavailable");
        }
        if (std::strcmp(env, "auto") != 0)
            throw InvalidConfig(std::string("unknown FACTTS_KERNELS value: ") + env);
    }
    if (const Ops* v = avx2_ops()) return {v, "avx2"};
    return {&kScalarOps, "scalar"};
}

State& state() {
    static State s = detect();
    return s;
}

}  // namespace

const Ops& active() { return *state().ops; }

void set_backend(Backend b) {
    switch (b) {
        case Backend::auto_detect:
            state() = avx2_ops() ? State{avx2_ops(), "avx2"} : State{&kScalarOps, "scalar"};
            break;
        case Backend::scalar:
            state() = {&kScalarOps, "scalar"};
            break;
        case Backend::avx2:
            if (const Ops* v = avx2_ops()) {
                state() = {v, "avx2"};
            } else {
                throw InvalidConfig("AVX2 backend unavailable on this CPU/build");
            }
            break;
    }
}

std::string backend_name() { return state().name; }

bool avx2_available() { return avx2_ops() != nullptr; }

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace factts::kernels
