#pragma once

#include <cstddef>

namespace tcpvit::kernels {

// Dense double-precision kernels behind every slice-wise matrix product and
// elementwise update in the library. Two backends exist: a scalar reference
// and an AVX2 variant selected at runtime. Both evaluate every output element
// with the same operation sequence (separate multiply and add, reduction index
// accumulated left to right), so they are bit-identical; the equivalence tests
// assert exact equality.

enum class Backend {
    Scalar,
    Avx2,
};

// True when the current CPU can run the AVX2 backend.
bool avx2_supported();

// Active backend; defaults to the best supported one. The TCPVIT_BACKEND
// environment variable ("scalar" or "avx2") overrides the default.
Backend active_backend();
void set_backend(Backend b);
const char* backend_name(Backend b);

// C[m x n] = A[m x k] * B[k x n], all row-major contiguous.
void matmul_nn(const double* a, const double* b, double* c,
               size_t m, size_t k, size_t n);

// C[m x n] = A[k x m]^T * B[k x n].
void matmul_tn(const double* a, const double* b, double* c,
               size_t m, size_t k, size_t n);

// C[m x n] = A[m x k] * B[n x k]^T.
void matmul_nt(const double* a, const double* b, double* c,
               size_t m, size_t k, size_t n);

// out = x + y / out = x - y / out = alpha * x ; y += alpha * x.
void add(const double* x, const double* y, double* out, size_t n);
void sub(const double* x, const double* y, double* out, size_t n);
void scale(double alpha, const double* x, double* out, size_t n);
void axpy(double alpha, const double* x, double* y, size_t n);

// Function table a backend provides. matmul_nt is implemented once on top of
// matmul_nn (transpose-copy then multiply), so it is not part of the table.
struct KernelTable {
    void (*matmul_nn)(const double*, const double*, double*, size_t, size_t, size_t);
    void (*matmul_tn)(const double*, const double*, double*, size_t, size_t, size_t);
    void (*add)(const double*, const double*, double*, size_t);
    void (*sub)(const double*, const double*, double*, size_t);
    void (*scale)(double, const double*, double*, size_t);
    void (*axpy)(double, const double*, double*, size_t);
};

}  // namespace tcpvit::kernels
