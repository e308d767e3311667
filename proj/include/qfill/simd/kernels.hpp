// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops shared by the dense statevector backend and the
// learners. Every kernel has a scalar reference in `scalar::` and, on x86-64,
// an AVX2/FMA variant in `avx2::`. The unqualified entry points dispatch at
// runtime on the active ISA; the variants are equivalence-tested against the
// references.
//
// Amplitude layout is little-endian: bit q of an index is qubit q.
// Two-qubit matrices are row-major 4x4 in the local basis
// k = bit(lo) | bit(hi) << 1, and apply_2q requires lo < hi.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace qfill::simd {

using cplx = std::complex<double>;
using Mat2 = std::array<cplx, 4>;
using Mat4 = std::array<cplx, 16>;

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
/// Best ISA of this CPU, unless QFILL_SIMD=scalar is set in the environment.
Isa detected_isa() noexcept;
Isa active_isa() noexcept;
/// Overrides the dispatch target; unsupported requests fall back to Scalar.
void set_active_isa(Isa isa) noexcept;

struct QubitMoments {
    double p0 = 0.0;  ///< sum |a_i|^2 over bit q = 0
    double p1 = 0.0;  ///< sum |a_i|^2 over bit q = 1
    cplx c01{};       ///< sum conj(a_i) a_{i | 1<<q} over bit q = 0
};

#define QFILL_SIMD_KERNEL_DECLS                                                  \
    void apply_1q(std::span<cplx> amps, unsigned q, const Mat2 &m);              \
    void apply_2q(std::span<cplx> amps, unsigned lo, unsigned hi, const Mat4 &m); \
    double norm_sq(std::span<const cplx> amps);                                  \
    QubitMoments qubit_moments(std::span<const cplx> amps, unsigned q);          \
    double dot(std::span<const double> x, std::span<const double> y);            \
    void axpy(double a, std::span<const double> x, std::span<double> y);

namespace scalar {
QFILL_SIMD_KERNEL_DECLS
}

#if defined(QFILL_HAVE_AVX2)
namespace avx2 {
QFILL_SIMD_KERNEL_DECLS
}
#endif

// Dispatched entry points.
QFILL_SIMD_KERNEL_DECLS

#undef QFILL_SIMD_KERNEL_DECLS

} // namespace qfill::simd
