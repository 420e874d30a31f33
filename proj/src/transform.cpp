#include "tcpvit/transform.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tcpvit/kernels.hpp"

namespace tcpvit {

DctPlan build_dct_plan(int64_t c) {
    if (c < 1) {
        throw std::invalid_argument("build_dct_plan: size must be >= 1, got " +
                                    std::to_string(c));
    }
    DctPlan plan;
    plan.size = c;
    plan.forward.resize(c * c);
    plan.inverse.resize(c * c);
    const double cd = static_cast<double>(c);
    for (int64_t j = 0; j < c; ++j) {
        const double amp = j == 0 ? std::sqrt(1.0 / cd) : std::sqrt(2.0 / cd);
        for (int64_t k = 0; k < c; ++k) {
            const double v =
                j == 0 ? amp
                       : amp * std::cos(std::numbers::pi * (2.0 * k + 1.0) * j / (2.0 * cd));
            plan.forward[j * c + k] = v;
            plan.inverse[k * c + j] = v;
        }
    }
    return plan;
}

namespace {

void require_channels(const Tensor3& x, const DctPlan& plan, const char* where) {
    if (x.channels != plan.size) {
        throw shape_error(std::string(where) + ": tensor has " +
                          std::to_string(x.channels) + " channels, plan size " +
                          std::to_string(plan.size));
    }
}

}  // namespace

Tensor3 dct3(const Tensor3& x, const DctPlan& plan) {
    require_channels(x, plan, "dct3");
    // With the channel index fastest, the tensor is a (rows*cols) x C matrix
    // of tubes; the mode-3 transform is one product with forward^T on the
    // right: out[t][j] = sum_l forward[j][l] * x[t][l].
    Tensor3 out(x.rows, x.cols, x.channels);
    kernels::matmul_nt(x.data.data(), plan.forward.data(), out.data.data(),
                       x.rows * x.cols, plan.size, plan.size);
    return out;
}

Tensor3 idct3(const Tensor3& xhat, const DctPlan& plan) {
    require_channels(xhat, plan, "idct3");
    Tensor3 out(xhat.rows, xhat.cols, xhat.channels);
    kernels::matmul_nn(xhat.data.data(), plan.forward.data(), out.data.data(),
                       xhat.rows * xhat.cols, plan.size, plan.size);
    return out;
}

}  // namespace tcpvit
