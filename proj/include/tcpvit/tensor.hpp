#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcpvit {

/// Dense real third-order tensor of shape rows x cols x channels.
/// Storage is row-major with the channel index fastest:
/// element (i, j, k) lives at data[(i * cols + j) * channels + k].
struct Tensor3 {
    int64_t rows = 0;
    int64_t cols = 0;
    int64_t channels = 0;
    std::vector<double> data;

    Tensor3() = default;

    // Zero-initialized tensor.
    Tensor3(int64_t m, int64_t n, int64_t c);

    // Takes ownership of `values`; validates length and finiteness.
    Tensor3(int64_t m, int64_t n, int64_t c, std::vector<double> values);

    double& operator()(int64_t i, int64_t j, int64_t k) {
        return data[(i * cols + j) * channels + k];
    }
    double operator()(int64_t i, int64_t j, int64_t k) const {
        return data[(i * cols + j) * channels + k];
    }

    // Bounds-checked access.
    double& at(int64_t i, int64_t j, int64_t k);
    double at(int64_t i, int64_t j, int64_t k) const;

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    bool same_shape(const Tensor3& other) const {
        return rows == other.rows && cols == other.cols && channels == other.channels;
    }
    std::string shape_str() const;

    // Throws if any element is NaN or infinite.
    void check_finite(const char* what = "Tensor3") const;
};

struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Throws shape_error with a message naming `where` unless both shapes match.
void require_same_shape(const Tensor3& a, const Tensor3& b, const char* where);

Tensor3 zeros_like(const Tensor3& t);

// Elementwise sum / difference; shapes must match.
Tensor3 add(const Tensor3& a, const Tensor3& b);
Tensor3 sub(const Tensor3& a, const Tensor3& b);
Tensor3 scaled(const Tensor3& a, double alpha);

// Copies frontal slice k into `out` (rows*cols doubles, row-major), and back.
void pack_slice(const Tensor3& t, int64_t k, double* out);
void unpack_slice(const double* in, int64_t k, Tensor3& t);

// Max-magnitude element and Frobenius norm.
double max_abs(const Tensor3& t);
double frobenius_norm(const Tensor3& t);
double max_abs_diff(const Tensor3& a, const Tensor3& b);

}  // namespace tcpvit
