// AVX2 kernel backend. Compiled with -mavx2 and selected at runtime only on
// CPUs that report AVX2 support.
//
// Bit-compatibility contract with the scalar backend: every C[i][j] is formed
// by the same sequence of IEEE multiplies and adds over the reduction index
// (left to right, starting from 0.0). Vectorization is over output columns
// only, and multiply/add stay separate instructions (no FMA), so results are
// identical to the scalar kernels bit for bit.

#include "tcpvit/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace tcpvit::kernels {

namespace {

inline void accumulate_row(const double* brow, double ail, double* crow, size_t n) {
    const __m256d va = _mm256_set1_pd(ail);
    size_t j = 0;
    for (; j + 16 <= n; j += 16) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        __m256d c1 = _mm256_loadu_pd(crow + j + 4);
        __m256d c2 = _mm256_loadu_pd(crow + j + 8);
        __m256d c3 = _mm256_loadu_pd(crow + j + 12);
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(va, _mm256_loadu_pd(brow + j)));
        c1 = _mm256_add_pd(c1, _mm256_mul_pd(va, _mm256_loadu_pd(brow + j + 4)));
        c2 = _mm256_add_pd(c2, _mm256_mul_pd(va, _mm256_loadu_pd(brow + j + 8)));
        c3 = _mm256_add_pd(c3, _mm256_mul_pd(va, _mm256_loadu_pd(brow + j + 12)));
        _mm256_storeu_pd(crow + j, c0);
        _mm256_storeu_pd(crow + j + 4, c1);
        _mm256_storeu_pd(crow + j + 8, c2);
        _mm256_storeu_pd(crow + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(va, _mm256_loadu_pd(brow + j)));
        _mm256_storeu_pd(crow + j, c0);
    }
    for (; j < n; ++j) {
        crow[j] += ail * brow[j];
    }
}

void matmul_nn_avx2(const double* a, const double* b, double* c,
                    size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        size_t j = 0;
        const __m256d zero = _mm256_setzero_pd();
        for (; j + 4 <= n; j += 4) _mm256_storeu_pd(crow + j, zero);
        for (; j < n; ++j) crow[j] = 0.0;
        for (size_t l = 0; l < k; ++l) {
            accumulate_row(b + l * n, a[i * k + l], crow, n);
        }
    }
}

void matmul_tn_avx2(const double* a, const double* b, double* c,
                    size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        size_t j = 0;
        const __m256d zero = _mm256_setzero_pd();
        for (; j + 4 <= n; j += 4) _mm256_storeu_pd(crow + j, zero);
        for (; j < n; ++j) crow[j] = 0.0;
        for (size_t l = 0; l < k; ++l) {
            accumulate_row(b + l * n, a[l * m + i], crow, n);
        }
    }
}

void add_avx2(const double* x, const double* y, double* out, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_avx2(const double* x, const double* y, double* out, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void scale_avx2(double alpha, const double* x, double* out, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_avx2(double alpha, const double* x, double* y, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

constexpr KernelTable kAvx2Table = {
    matmul_nn_avx2, matmul_tn_avx2,
    add_avx2, sub_avx2, scale_avx2, axpy_avx2,
};

}  // namespace

const KernelTable* tcpvit_avx2_kernel_table() { return &kAvx2Table; }

}  // namespace tcpvit::kernels

#endif  // x86_64
