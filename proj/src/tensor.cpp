#include "tcpvit/tensor.hpp"

#include <cmath>
#include <utility>

#include "tcpvit/kernels.hpp"

namespace tcpvit {

Tensor3::Tensor3(int64_t m, int64_t n, int64_t c)
    : rows(m), cols(n), channels(c), data(static_cast<size_t>(m * n * c), 0.0) {
    if (m < 0 || n < 0 || c < 0) {
        throw shape_error("Tensor3: negative dimension");
    }
}

Tensor3::Tensor3(int64_t m, int64_t n, int64_t c, std::vector<double> values)
    : rows(m), cols(n), channels(c), data(std::move(values)) {
    if (m < 0 || n < 0 || c < 0) {
        throw shape_error("Tensor3: negative dimension");
    }
    if (static_cast<int64_t>(data.size()) != m * n * c) {
        throw shape_error("Tensor3: data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_str());
    }
    check_finite();
}

double& Tensor3::at(int64_t i, int64_t j, int64_t k) {
    if (i < 0 || i >= rows || j < 0 || j >= cols || k < 0 || k >= channels) {
        throw std::out_of_range("Tensor3::at index out of range");
    }
    return (*this)(i, j, k);
}

double Tensor3::at(int64_t i, int64_t j, int64_t k) const {
    if (i < 0 || i >= rows || j < 0 || j >= cols || k < 0 || k >= channels) {
        throw std::out_of_range("Tensor3::at index out of range");
    }
    return (*this)(i, j, k);
}

std::string Tensor3::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols) + "x" + std::to_string(channels);
}

void Tensor3::check_finite(const char* what) const {
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": non-finite value");
        }
    }
}

void require_same_shape(const Tensor3& a, const Tensor3& b, const char* where) {
    if (!a.same_shape(b)) {
        throw shape_error(std::string(where) + ": shape mismatch " + a.shape_str() +
                          " vs " + b.shape_str());
    }
}

Tensor3 zeros_like(const Tensor3& t) { return Tensor3(t.rows, t.cols, t.channels); }

Tensor3 add(const Tensor3& a, const Tensor3& b) {
    require_same_shape(a, b, "add");
    Tensor3 out(a.rows, a.cols, a.channels);
    kernels::add(a.data.data(), b.data.data(), out.data.data(), a.data.size());
    return out;
}

Tensor3 sub(const Tensor3& a, const Tensor3& b) {
    require_same_shape(a, b, "sub");
    Tensor3 out(a.rows, a.cols, a.channels);
    kernels::sub(a.data.data(), b.data.data(), out.data.data(), a.data.size());
    return out;
}

Tensor3 scaled(const Tensor3& a, double alpha) {
    Tensor3 out(a.rows, a.cols, a.channels);
    kernels::scale(alpha, a.data.data(), out.data.data(), a.data.size());
    return out;
}

void pack_slice(const Tensor3& t, int64_t k, double* out) {
    const int64_t mn = t.rows * t.cols;
    const double* src = t.data.data() + k;
    for (int64_t s = 0; s < mn; ++s) {
        out[s] = src[s * t.channels];
    }
}

void unpack_slice(const double* in, int64_t k, Tensor3& t) {
    const int64_t mn = t.rows * t.cols;
    double* dst = t.data.data() + k;
    for (int64_t s = 0; s < mn; ++s) {
        dst[s * t.channels] = in[s];
    }
}

double max_abs(const Tensor3& t) {
    double m = 0.0;
    for (double v : t.data) m = std::max(m, std::fabs(v));
    return m;
}

double frobenius_norm(const Tensor3& t) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

double max_abs_diff(const Tensor3& a, const Tensor3& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    }
    return m;
}

}  // namespace tcpvit
