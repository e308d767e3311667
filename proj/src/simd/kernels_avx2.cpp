// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 -mfma; only reached through dispatch when the CPU
// reports both extensions.
#include "qfill/simd/kernels.hpp"

#include <immintrin.h>

#include <cassert>

namespace qfill::simd::avx2 {
namespace {

constexpr std::size_t insert_zero(std::size_t k, unsigned bit) noexcept {
    const std::size_t low = k & ((std::size_t{1} << bit) - 1);
    return ((k >> bit) << (bit + 1)) | low;
}

struct Bcast {
    __m256d re;
    __m256d im;
};

inline Bcast bcast(cplx c) noexcept {
    return {_mm256_set1_pd(c.real()), _mm256_set1_pd(c.imag())};
}

// (m * v) for two packed complexes in v.
inline __m256d cmul(const Bcast &m, __m256d v) noexcept {
    const __m256d swapped = _mm256_permute_pd(v, 0b0101);
    return _mm256_fmaddsub_pd(m.re, v, _mm256_mul_pd(m.im, swapped));
}

inline __m256d load2(const cplx *p) noexcept {
    return _mm256_loadu_pd(reinterpret_cast<const double *>(p));
}

inline void store2(cplx *p, __m256d v) noexcept {
    _mm256_storeu_pd(reinterpret_cast<double *>(p), v);
}

inline double hsum(__m256d v) noexcept {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

} // namespace

void apply_1q(std::span<cplx> amps, unsigned q, const Mat2 &m) {
    if (q == 0) {
        // Partners are adjacent; the pairing trick below needs bit 0 free.
        scalar::apply_1q(amps, q, m);
        return;
    }
    const Bcast m00 = bcast(m[0]), m01 = bcast(m[1]), m10 = bcast(m[2]),
                m11 = bcast(m[3]);
    const std::size_t stride = std::size_t{1} << q;
    const std::size_t half = amps.size() / 2;
    cplx *base = amps.data();
    for (std::size_t k = 0; k < half; k += 2) {
        const std::size_t i0 = insert_zero(k, q);
        const __m256d a0 = load2(base + i0);
        const __m256d a1 = load2(base + i0 + stride);
        store2(base + i0, _mm256_add_pd(cmul(m00, a0), cmul(m01, a1)));
        store2(base + i0 + stride, _mm256_add_pd(cmul(m10, a0), cmul(m11, a1)));
    }
}

void apply_2q(std::span<cplx> amps, unsigned lo, unsigned hi, const Mat4 &m) {
    assert(lo < hi);
    if (lo == 0) {
        scalar::apply_2q(amps, lo, hi, m);
        return;
    }
    Bcast mb[16];
    for (int i = 0; i < 16; ++i) {
        mb[i] = bcast(m[i]);
    }
    const std::size_t s_lo = std::size_t{1} << lo;
    const std::size_t s_hi = std::size_t{1} << hi;
    const std::size_t quarter = amps.size() / 4;
    cplx *base = amps.data();
    for (std::size_t k = 0; k < quarter; k += 2) {
        const std::size_t i0 = insert_zero(insert_zero(k, lo), hi);
        cplx *p[4] = {base + i0, base + (i0 | s_lo), base + (i0 | s_hi),
                      base + (i0 | s_lo | s_hi)};
        const __m256d a[4] = {load2(p[0]), load2(p[1]), load2(p[2]), load2(p[3])};
        for (int r = 0; r < 4; ++r) {
            __m256d acc = cmul(mb[4 * r], a[0]);
            acc = _mm256_add_pd(acc, cmul(mb[4 * r + 1], a[1]));
            acc = _mm256_add_pd(acc, cmul(mb[4 * r + 2], a[2]));
            acc = _mm256_add_pd(acc, cmul(mb[4 * r + 3], a[3]));
            store2(p[r], acc);
        }
    }
}

double norm_sq(std::span<const cplx> amps) {
    const double *d = reinterpret_cast<const double *>(amps.data());
    const std::size_t n = 2 * amps.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d x0 = _mm256_loadu_pd(d + i);
        const __m256d x1 = _mm256_loadu_pd(d + i + 4);
        acc0 = _mm256_fmadd_pd(x0, x0, acc0);
        acc1 = _mm256_fmadd_pd(x1, x1, acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        s += d[i] * d[i];
    }
    return s;
}

QubitMoments qubit_moments(std::span<const cplx> amps, unsigned q) {
    if (q == 0) {
        return scalar::qubit_moments(amps, q);
    }
    const std::size_t stride = std::size_t{1} << q;
    const std::size_t half = amps.size() / 2;
    const cplx *base = amps.data();
    __m256d n0 = _mm256_setzero_pd();
    __m256d n1 = _mm256_setzero_pd();
    __m256d cre = _mm256_setzero_pd();
    __m256d cim = _mm256_setzero_pd();
    for (std::size_t k = 0; k < half; k += 2) {
        const std::size_t i0 = insert_zero(k, q);
        const __m256d a0 = load2(base + i0);
        const __m256d a1 = load2(base + i0 + stride);
        n0 = _mm256_fmadd_pd(a0, a0, n0);
        n1 = _mm256_fmadd_pd(a1, a1, n1);
        cre = _mm256_fmadd_pd(a0, a1, cre);
        cim = _mm256_fmadd_pd(a0, _mm256_permute_pd(a1, 0b0101), cim);
    }
    alignas(32) double im[4];
    _mm256_store_pd(im, cim);
    QubitMoments out;
    out.p0 = hsum(n0);
    out.p1 = hsum(n1);
    // conj(a0) a1 = (a0r a1r + a0i a1i) + i (a0r a1i - a0i a1r)
    out.c01 = cplx(hsum(cre), (im[0] - im[1]) + (im[2] - im[3]));
    return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    const std::size_t n = x.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i),
                               _mm256_loadu_pd(y.data() + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i + 4),
                               _mm256_loadu_pd(y.data() + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i),
                               _mm256_loadu_pd(y.data() + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        s += x[i] * y[i];
    }
    return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    const std::size_t n = x.size();
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d yv = _mm256_loadu_pd(y.data() + i);
        _mm256_storeu_pd(y.data() + i,
                         _mm256_fmadd_pd(av, _mm256_loadu_pd(x.data() + i), yv));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

} // namespace qfill::simd::avx2
