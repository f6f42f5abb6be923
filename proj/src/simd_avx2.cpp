// AVX2+FMA complex kernels. Compiled with target attributes so the rest of
// the library stays baseline x86-64; only called when cpu_has_avx2().

#include "dh2/simd.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#define DH2_AVX2 __attribute__((target("avx2,fma")))

namespace dh2::simd::avx2 {

namespace {

// Two interleaved complex numbers per register: [re0, im0, re1, im1].

DH2_AVX2 inline __m256d cmul(__m256d a, __m256d xr, __m256d xi) {
    // (ar + i ai)(xr + i xi) = (ar xr - ai xi) + i (ai xr + ar xi)
    const __m256d swapped = _mm256_permute_pd(a, 0b0101);
    return _mm256_fmaddsub_pd(a, xr, _mm256_mul_pd(swapped, xi));
}

DH2_AVX2 inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

} // namespace

DH2_AVX2 void axpy(std::size_t n, cplx alpha, const cplx *x, cplx *y) {
    const __m256d ar = _mm256_set1_pd(alpha.real());
    const __m256d ai = _mm256_set1_pd(alpha.imag());
    const double *xp = reinterpret_cast<const double *>(x);
    double *yp = reinterpret_cast<double *>(y);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d xv = _mm256_loadu_pd(xp + 2 * i);
        const __m256d yv = _mm256_loadu_pd(yp + 2 * i);
        _mm256_storeu_pd(yp + 2 * i, _mm256_add_pd(yv, cmul(xv, ar, ai)));
    }
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

DH2_AVX2 cplx dotc(std::size_t n, const cplx *x, const cplx *y) {
    // conj(x) y: re = xr yr + xi yi, im = xr yi - xi yr
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    const double *xp = reinterpret_cast<const double *>(x);
    const double *yp = reinterpret_cast<const double *>(y);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d xv = _mm256_loadu_pd(xp + 2 * i);
        const __m256d yv = _mm256_loadu_pd(yp + 2 * i);
        acc_re = _mm256_fmadd_pd(xv, yv, acc_re);
        acc_im = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0b0101), acc_im);
    }
    // acc_im lanes hold [xr yi, xi yr, ...]; the odd lanes enter with a minus sign.
    const __m256d sign = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
    double re = hsum(acc_re);
    double im = hsum(_mm256_mul_pd(acc_im, sign));
    for (; i < n; ++i) {
        re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
        im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
    }
    return {re, im};
}

DH2_AVX2 void gemv_n(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y) {
    double *yp = reinterpret_cast<double *>(y);
    std::size_t j = 0;
    // Two columns per pass halves the traffic on y.
    for (; j + 2 <= cols; j += 2) {
        const __m256d x0r = _mm256_set1_pd(x[j].real());
        const __m256d x0i = _mm256_set1_pd(x[j].imag());
        const __m256d x1r = _mm256_set1_pd(x[j + 1].real());
        const __m256d x1i = _mm256_set1_pd(x[j + 1].imag());
        const double *c0 = reinterpret_cast<const double *>(a + j * ld);
        const double *c1 = reinterpret_cast<const double *>(a + (j + 1) * ld);
        std::size_t i = 0;
        for (; i + 2 <= rows; i += 2) {
            __m256d yv = _mm256_loadu_pd(yp + 2 * i);
            yv = _mm256_add_pd(yv, cmul(_mm256_loadu_pd(c0 + 2 * i), x0r, x0i));
            yv = _mm256_add_pd(yv, cmul(_mm256_loadu_pd(c1 + 2 * i), x1r, x1i));
            _mm256_storeu_pd(yp + 2 * i, yv);
        }
        for (; i < rows; ++i) {
            y[i] += a[i + j * ld] * x[j];
            y[i] += a[i + (j + 1) * ld] * x[j + 1];
        }
    }
    for (; j < cols; ++j)
        axpy(rows, x[j], a + j * ld, y);
}

DH2_AVX2 void gemv_c(std::size_t rows, std::size_t cols, const cplx *a, std::size_t ld, const cplx *x, cplx *y) {
    for (std::size_t j = 0; j < cols; ++j)
        y[j] += dotc(rows, a + j * ld, x);
}

} // namespace dh2::simd::avx2

#endif
