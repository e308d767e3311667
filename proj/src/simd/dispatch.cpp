// SPDX-License-Identifier: Apache-2.0
#include "qfill/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace qfill::simd {
namespace {

Isa probe() noexcept {
    if (const char *env = std::getenv("QFILL_SIMD")) {
        if (std::string_view(env) == "scalar") {
            return Isa::Scalar;
        }
    }
    return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa> &active() noexcept {
    static std::atomic<Isa> isa{probe()};
    return isa;
}

} // namespace

std::string_view to_string(Isa isa) noexcept {
    return isa == Isa::Avx2 ? "avx2" : "scalar";
}

bool isa_supported(Isa isa) noexcept {
    if (isa == Isa::Scalar) {
        return true;
    }
#if defined(QFILL_HAVE_AVX2)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detected_isa() noexcept { return probe(); }

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) noexcept {
    active().store(isa_supported(isa) ? isa : Isa::Scalar);
}

#if defined(QFILL_HAVE_AVX2)
#define QFILL_DISPATCH(call)                                                     \
    if (active_isa() == Isa::Avx2) {                                             \
        return avx2::call;                                                       \
    }                                                                            \
    return scalar::call
#else
#define QFILL_DISPATCH(call) return scalar::call
#endif

void apply_1q(std::span<cplx> amps, unsigned q, const Mat2 &m) {
    QFILL_DISPATCH(apply_1q(amps, q, m));
}

void apply_2q(std::span<cplx> amps, unsigned lo, unsigned hi, const Mat4 &m) {
    QFILL_DISPATCH(apply_2q(amps, lo, hi, m));
}

double norm_sq(std::span<const cplx> amps) { QFILL_DISPATCH(norm_sq(amps)); }

QubitMoments qubit_moments(std::span<const cplx> amps, unsigned q) {
    QFILL_DISPATCH(qubit_moments(amps, q));
}

double dot(std::span<const double> x, std::span<const double> y) {
    QFILL_DISPATCH(dot(x, y));
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    QFILL_DISPATCH(axpy(a, x, y));
}

#undef QFILL_DISPATCH

} // namespace qfill::simd
