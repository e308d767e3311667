// SPDX-License-Identifier: Apache-2.0
#include "qfill/simd/kernels.hpp"

#include <cassert>

namespace qfill::simd::scalar {
namespace {

constexpr std::size_t insert_zero(std::size_t k, unsigned bit) noexcept {
    const std::size_t low = k & ((std::size_t{1} << bit) - 1);
    return ((k >> bit) << (bit + 1)) | low;
}

} // namespace

void apply_1q(std::span<cplx> amps, unsigned q, const Mat2 &m) {
    const std::size_t stride = std::size_t{1} << q;
    const std::size_t half = amps.size() / 2;
    for (std::size_t k = 0; k < half; ++k) {
        const std::size_t i0 = insert_zero(k, q);
        const std::size_t i1 = i0 | stride;
        const cplx a0 = amps[i0];
        const cplx a1 = amps[i1];
        amps[i0] = m[0] * a0 + m[1] * a1;
        amps[i1] = m[2] * a0 + m[3] * a1;
    }
}

void apply_2q(std::span<cplx> amps, unsigned lo, unsigned hi, const Mat4 &m) {
    assert(lo < hi);
    const std::size_t s_lo = std::size_t{1} << lo;
    const std::size_t s_hi = std::size_t{1} << hi;
    const std::size_t quarter = amps.size() / 4;
    for (std::size_t k = 0; k < quarter; ++k) {
        const std::size_t i0 = insert_zero(insert_zero(k, lo), hi);
        const std::size_t idx[4] = {i0, i0 | s_lo, i0 | s_hi, i0 | s_lo | s_hi};
        const cplx a[4] = {amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]};
        for (int r = 0; r < 4; ++r) {
            amps[idx[r]] = m[4 * r] * a[0] + m[4 * r + 1] * a[1] +
                           m[4 * r + 2] * a[2] + m[4 * r + 3] * a[3];
        }
    }
}

double norm_sq(std::span<const cplx> amps) {
    double s = 0.0;
    for (const auto &a : amps) {
        s += std::norm(a);
    }
    return s;
}

QubitMoments qubit_moments(std::span<const cplx> amps, unsigned q) {
    const std::size_t stride = std::size_t{1} << q;
    const std::size_t half = amps.size() / 2;
    QubitMoments out;
    for (std::size_t k = 0; k < half; ++k) {
        const std::size_t i0 = insert_zero(k, q);
        const cplx a0 = amps[i0];
        const cplx a1 = amps[i0 | stride];
        out.p0 += std::norm(a0);
        out.p1 += std::norm(a1);
        out.c01 += std::conj(a0) * a1;
    }
    return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
    }
    return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] += a * x[i];
    }
}

} // namespace qfill::simd::scalar
