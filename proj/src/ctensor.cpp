#include "tcpvit/ctensor.hpp"

#include <cmath>
#include <vector>

#include "tcpvit/kernels.hpp"

namespace tcpvit {

namespace {

void require_channels(const Tensor3& t, const DctPlan& plan, const char* where) {
    if (t.channels != plan.size) {
        throw shape_error(std::string(where) + ": channel mismatch (" +
                          std::to_string(t.channels) + " vs plan " +
                          std::to_string(plan.size) + ")");
    }
}

void require_square(const Tensor3& t, const char* where) {
    if (t.rows != t.cols) {
        throw shape_error(std::string(where) + ": tensor is not square in modes 1-2 (" +
                          t.shape_str() + ")");
    }
}

// Inverts an n x n row-major matrix in place by Gauss-Jordan elimination with
// partial pivoting. Returns false when a pivot falls below tol.
bool invert_matrix(std::vector<double>& a, int64_t n, double tol) {
    std::vector<double> inv(n * n, 0.0);
    for (int64_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (int64_t col = 0; col < n; ++col) {
        int64_t pivot = col;
        double best = std::fabs(a[col * n + col]);
        for (int64_t r = col + 1; r < n; ++r) {
            const double v = std::fabs(a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best <= tol) return false;
        if (pivot != col) {
            for (int64_t j = 0; j < n; ++j) {
                std::swap(a[pivot * n + j], a[col * n + j]);
                std::swap(inv[pivot * n + j], inv[col * n + j]);
            }
        }
        const double d = a[col * n + col];
        for (int64_t j = 0; j < n; ++j) {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for (int64_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col];
            if (f == 0.0) continue;
            for (int64_t j = 0; j < n; ++j) {
                a[r * n + j] -= f * a[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    a = std::move(inv);
    return true;
}

}  // namespace

Tensor3 cprod_hat(const Tensor3& ahat, const Tensor3& bhat) {
    if (ahat.cols != bhat.rows) {
        throw shape_error("cprod: inner dimensions " + ahat.shape_str() + " vs " +
                          bhat.shape_str());
    }
    if (ahat.channels != bhat.channels) {
        throw shape_error("cprod: channel mismatch (" + std::to_string(ahat.channels) +
                          " vs " + std::to_string(bhat.channels) + ")");
    }
    const int64_t c = ahat.channels;
    Tensor3 out(ahat.rows, bhat.cols, c);
    std::vector<double> sa(ahat.rows * ahat.cols);
    std::vector<double> sb(bhat.rows * bhat.cols);
    std::vector<double> sc(out.rows * out.cols);
    for (int64_t k = 0; k < c; ++k) {
        pack_slice(ahat, k, sa.data());
        pack_slice(bhat, k, sb.data());
        kernels::matmul_nn(sa.data(), sb.data(), sc.data(), ahat.rows, ahat.cols,
                           bhat.cols);
        unpack_slice(sc.data(), k, out);
    }
    return out;
}

Tensor3 cprod(const Tensor3& a, const Tensor3& b, const DctPlan& plan) {
    require_channels(a, plan, "cprod");
    require_channels(b, plan, "cprod");
    return idct3(cprod_hat(dct3(a, plan), dct3(b, plan)), plan);
}

Tensor3 ctranspose(const Tensor3& a, const DctPlan& plan) {
    require_channels(a, plan, "ctranspose");
    Tensor3 out(a.cols, a.rows, a.channels);
    for (int64_t i = 0; i < a.rows; ++i) {
        for (int64_t j = 0; j < a.cols; ++j) {
            for (int64_t k = 0; k < a.channels; ++k) {
                out(j, i, k) = a(i, j, k);
            }
        }
    }
    return out;
}

Tensor3 identity_tensor(int64_t m, int64_t c, const DctPlan& plan) {
    if (m < 1 || c < 1) {
        throw std::invalid_argument("identity_tensor: dimensions must be >= 1");
    }
    if (plan.size != c) {
        throw shape_error("identity_tensor: channel mismatch with plan");
    }
    Tensor3 hat(m, m, c);
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t k = 0; k < c; ++k) {
            hat(i, i, k) = 1.0;
        }
    }
    return idct3(hat, plan);
}

Tensor3 cinv(const Tensor3& a, const DctPlan& plan) {
    require_square(a, "cinv");
    require_channels(a, plan, "cinv");
    const int64_t m = a.rows;
    Tensor3 ahat = dct3(a, plan);
    Tensor3 invhat(m, m, a.channels);
    std::vector<double> slice(m * m);
    for (int64_t k = 0; k < a.channels; ++k) {
        pack_slice(ahat, k, slice.data());
        double maxv = 0.0;
        for (double v : slice) maxv = std::max(maxv, std::fabs(v));
        if (!invert_matrix(slice, m, 1e-12 * maxv)) {
            throw singular_slice_error(k);
        }
        unpack_slice(slice.data(), k, invhat);
    }
    return idct3(invhat, plan);
}

bool is_f_diagonal(const Tensor3& a, const DctPlan& plan, double tol) {
    require_square(a, "is_f_diagonal");
    require_channels(a, plan, "is_f_diagonal");
    const Tensor3 ahat = dct3(a, plan);
    for (int64_t i = 0; i < a.rows; ++i) {
        for (int64_t j = 0; j < a.cols; ++j) {
            if (i == j) continue;
            for (int64_t k = 0; k < a.channels; ++k) {
                if (std::fabs(ahat(i, j, k)) > tol) return false;
            }
        }
    }
    return true;
}

bool is_f_symmetric(const Tensor3& a, const DctPlan& plan, double tol) {
    require_square(a, "is_f_symmetric");
    require_channels(a, plan, "is_f_symmetric");
    const Tensor3 ahat = dct3(a, plan);
    for (int64_t i = 0; i < a.rows; ++i) {
        for (int64_t j = i + 1; j < a.cols; ++j) {
            for (int64_t k = 0; k < a.channels; ++k) {
                if (std::fabs(ahat(i, j, k) - ahat(j, i, k)) > tol) return false;
            }
        }
    }
    return true;
}

bool is_f_orthogonal(const Tensor3& a, const DctPlan& plan, double tol) {
    require_square(a, "is_f_orthogonal");
    require_channels(a, plan, "is_f_orthogonal");
    const Tensor3 ahat = dct3(a, plan);
    const int64_t m = a.rows;
    std::vector<double> slice(m * m);
    std::vector<double> gram(m * m);
    for (int64_t k = 0; k < a.channels; ++k) {
        pack_slice(ahat, k, slice.data());
        kernels::matmul_tn(slice.data(), slice.data(), gram.data(), m, m, m);
        for (int64_t i = 0; i < m; ++i) {
            for (int64_t j = 0; j < m; ++j) {
                const double want = i == j ? 1.0 : 0.0;
                if (std::fabs(gram[i * m + j] - want) > tol) return false;
            }
        }
    }
    return true;
}

bool is_f_positive_definite(const Tensor3& a, const DctPlan& plan) {
    require_square(a, "is_f_positive_definite");
    require_channels(a, plan, "is_f_positive_definite");
    if (!is_f_symmetric(a, plan)) return false;
    const Tensor3 ahat = dct3(a, plan);
    const int64_t m = a.rows;
    std::vector<double> s(m * m);
    std::vector<double> chol(m * m);
    for (int64_t k = 0; k < a.channels; ++k) {
        pack_slice(ahat, k, s.data());
        // In-place lower Cholesky; fails iff the slice is not positive definite.
        std::fill(chol.begin(), chol.end(), 0.0);
        for (int64_t i = 0; i < m; ++i) {
            for (int64_t j = 0; j <= i; ++j) {
                double sum = s[i * m + j];
                for (int64_t l = 0; l < j; ++l) sum -= chol[i * m + l] * chol[j * m + l];
                if (i == j) {
                    if (sum <= 0.0) return false;
                    chol[i * m + i] = std::sqrt(sum);
                } else {
                    chol[i * m + j] = sum / chol[j * m + j];
                }
            }
        }
    }
    return true;
}

}  // namespace tcpvit
