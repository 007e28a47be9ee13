// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "kernels_impl.hpp"

#include <immintrin.h>

namespace fne::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
    // (v0 + v2) + (v1 + v3), same pairing as the scalar reference.
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d pair = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(pair, pair);
    return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, prod);
    }
    double sum = hsum(acc);
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

void dot_rows(const double* query, const double* rows, std::size_t n_rows, std::size_t dim,
              double* out) {
    for (std::size_t r = 0; r < n_rows; ++r) {
        out[r] = dot(query, rows + r * dim, dim);
    }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void lerp(double t, const double* x, double* y, std::size_t n) {
    const __m256d vt = _mm256_set1_pd(t);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(vt, diff)));
    }
    for (; i < n; ++i) {
        y[i] += t * (x[i] - y[i]);
    }
}

} // namespace

const KernelTable& table() {
    static const KernelTable t{&dot, &dot_rows, &axpy, &lerp};
    return t;
}

} // namespace fne::kernels::avx2
