#include "tcpvit/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcpvit::kernels {

#if defined(__x86_64__) || defined(_M_X64)
// Defined in kernels_avx2.cpp (compiled with -mavx2).
const KernelTable* tcpvit_avx2_kernel_table();
#endif

namespace {

// ---------------------------------------------------------------------------
// Scalar reference backend.
//
// matmul loops run i (row of C), then the reduction index l, then j, so each
// C[i][j] accumulates its k partial products strictly left to right. The AVX2
// backend keeps the identical per-element order and must stay bit-compatible.
// ---------------------------------------------------------------------------

void matmul_nn_scalar(const double* a, const double* b, double* c,
                      size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (size_t l = 0; l < k; ++l) {
            const double ail = a[i * k + l];
            const double* brow = b + l * n;
            for (size_t j = 0; j < n; ++j) {
                crow[j] += ail * brow[j];
            }
        }
    }
}

void matmul_tn_scalar(const double* a, const double* b, double* c,
                      size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (size_t l = 0; l < k; ++l) {
            const double ali = a[l * m + i];
            const double* brow = b + l * n;
            for (size_t j = 0; j < n; ++j) {
                crow[j] += ali * brow[j];
            }
        }
    }
}

void add_scalar(const double* x, const double* y, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_scalar(const double* x, const double* y, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void scale_scalar(double alpha, const double* x, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

constexpr KernelTable kScalarTable = {
    matmul_nn_scalar, matmul_tn_scalar,
    add_scalar, sub_scalar, scale_scalar, axpy_scalar,
};

const KernelTable* avx2_table() {
#if defined(__x86_64__) || defined(_M_X64)
    return tcpvit_avx2_kernel_table();
#else
    return nullptr;
#endif
}

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Backend initial_backend() {
    if (const char* env = std::getenv("TCPVIT_BACKEND")) {
        const std::string v(env);
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2" && cpu_has_avx2() && avx2_table()) return Backend::Avx2;
    }
    return (cpu_has_avx2() && avx2_table()) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<const KernelTable*>& table_slot() {
    static std::atomic<const KernelTable*> slot{
        initial_backend() == Backend::Avx2 ? avx2_table() : &kScalarTable};
    return slot;
}

const KernelTable& table() { return *table_slot().load(std::memory_order_relaxed); }

}  // namespace

bool avx2_supported() { return cpu_has_avx2() && avx2_table() != nullptr; }

Backend active_backend() {
    return table_slot().load(std::memory_order_relaxed) == &kScalarTable
               ? Backend::Scalar
               : Backend::Avx2;
}

void set_backend(Backend b) {
    if (b == Backend::Avx2) {
        if (!avx2_supported()) {
            throw std::runtime_error("AVX2 backend not available on this CPU/build");
        }
        table_slot().store(avx2_table(), std::memory_order_relaxed);
    } else {
        table_slot().store(&kScalarTable, std::memory_order_relaxed);
    }
}

const char* backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

void matmul_nn(const double* a, const double* b, double* c,
               size_t m, size_t k, size_t n) {
    table().matmul_nn(a, b, c, m, k, n);
}

void matmul_tn(const double* a, const double* b, double* c,
               size_t m, size_t k, size_t n) {
    table().matmul_tn(a, b, c, m, k, n);
}

void matmul_nt(const double* a, const double* b, double* c,
               size_t m, size_t k, size_t n) {
    // Transpose B into scratch so both backends run their nn kernel; the
    // per-element arithmetic is unchanged by the copy.
    thread_local std::vector<double> scratch;
    scratch.resize(k * n);
    for (size_t j = 0; j < n; ++j) {
        for (size_t l = 0; l < k; ++l) {
            scratch[l * n + j] = b[j * k + l];
        }
    }
    table().matmul_nn(a, scratch.data(), c, m, k, n);
}

void add(const double* x, const double* y, double* out, size_t n) {
    table().add(x, y, out, n);
}

void sub(const double* x, const double* y, double* out, size_t n) {
    table().sub(x, y, out, n);
}

void scale(double alpha, const double* x, double* out, size_t n) {
    table().scale(alpha, x, out, n);
}

void axpy(double alpha, const double* x, double* y, size_t n) {
    table().axpy(alpha, x, y, n);
}

}  // namespace tcpvit::kernels
