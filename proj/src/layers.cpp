#include "tcpvit/layers.hpp"

#include <cmath>
#include <numbers>

#include "tcpvit/kernels.hpp"

namespace tcpvit {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

void check_linear_shapes(const Tensor3& xhat, const TLinearParams& p) {
    if (xhat.cols != p.w.rows) {
        throw shape_error("t_linear: input cols " + std::to_string(xhat.cols) +
                          " vs weight rows " + std::to_string(p.w.rows));
    }
    if (xhat.channels != p.w.channels || p.b.channels != p.w.channels ||
        p.b.cols != p.w.cols || p.b.rows != 1) {
        throw shape_error("t_linear: inconsistent parameter shapes");
    }
}

// Row-wise softmax with max subtraction on a contiguous rows x cols matrix.
void softmax_rows(double* m, int64_t rows, int64_t cols) {
    for (int64_t i = 0; i < rows; ++i) {
        double* row = m + i * cols;
        double mx = row[0];
        for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int64_t j = 0; j < cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        const double inv = 1.0 / sum;
        for (int64_t j = 0; j < cols; ++j) row[j] *= inv;
    }
}

Tensor3 concat_mode2(const std::vector<Tensor3>& parts) {
    int64_t total = 0;
    for (const Tensor3& t : parts) total += t.cols;
    Tensor3 out(parts[0].rows, total, parts[0].channels);
    int64_t off = 0;
    for (const Tensor3& t : parts) {
        for (int64_t i = 0; i < t.rows; ++i) {
            for (int64_t j = 0; j < t.cols; ++j) {
                for (int64_t k = 0; k < t.channels; ++k) {
                    out(i, off + j, k) = t(i, j, k);
                }
            }
        }
        off += t.cols;
    }
    return out;
}

}  // namespace

double gelu(double x) { return x * 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

Tensor3 gelu(const Tensor3& x) {
    Tensor3 out(x.rows, x.cols, x.channels);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = gelu(x.data[i]);
    return out;
}

Tensor3 t_linear_hat(const Tensor3& xhat, const TLinearParams& p) {
    check_linear_shapes(xhat, p);
    const int64_t n = xhat.rows, din = xhat.cols, dout = p.w.cols, c = xhat.channels;
    Tensor3 out(n, dout, c);
    std::vector<double> sx(n * din), sw(din * dout), sy(n * dout);
    for (int64_t k = 0; k < c; ++k) {
        pack_slice(xhat, k, sx.data());
        pack_slice(p.w, k, sw.data());
        kernels::matmul_nn(sx.data(), sw.data(), sy.data(), n, din, dout);
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < dout; ++j) {
                sy[i * dout + j] += p.b(0, j, k);
            }
        }
        unpack_slice(sy.data(), k, out);
    }
    return out;
}

Tensor3 t_softmax_hat(const Tensor3& shat) {
    if (shat.rows != shat.cols) {
        throw shape_error("t_softmax: tensor not square in modes 1-2 (" +
                          shat.shape_str() + ")");
    }
    const int64_t n = shat.rows, c = shat.channels;
    Tensor3 out(n, n, c);
    std::vector<double> slice(n * n);
    for (int64_t k = 0; k < c; ++k) {
        pack_slice(shat, k, slice.data());
        softmax_rows(slice.data(), n, n);
        unpack_slice(slice.data(), k, out);
    }
    return out;
}

Tensor3 t_layernorm_hat(const Tensor3& xhat, const TLayerNormParams& p, LnStats* stats) {
    if (p.gamma.cols != xhat.cols || p.gamma.channels != xhat.channels ||
        !p.gamma.same_shape(p.beta)) {
        throw shape_error("t_layernorm: parameter shape mismatch");
    }
    const int64_t n = xhat.rows, d = xhat.cols, c = xhat.channels;
    Tensor3 out(n, d, c);
    if (stats) {
        stats->mu.assign(n * c, 0.0);
        stats->sigma.assign(n * c, 0.0);
    }
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t k = 0; k < c; ++k) {
            double mu = 0.0;
            for (int64_t j = 0; j < d; ++j) mu += xhat(i, j, k);
            mu /= static_cast<double>(d);
            double var = 0.0;
            for (int64_t j = 0; j < d; ++j) {
                const double t = xhat(i, j, k) - mu;
                var += t * t;
            }
            var /= static_cast<double>(d);
            const double sigma = std::sqrt(var);
            // Denominator is sigma + eps, not sqrt(var + eps).
            const double inv = 1.0 / (sigma + p.eps);
            for (int64_t j = 0; j < d; ++j) {
                out(i, j, k) = p.gamma(0, j, k) * (xhat(i, j, k) - mu) * inv +
                               p.beta(0, j, k);
            }
            if (stats) {
                stats->mu[i * c + k] = mu;
                stats->sigma[i * c + k] = sigma;
            }
        }
    }
    return out;
}

Tensor3 t_attention_hat(const Tensor3& qhat, const Tensor3& khat, const Tensor3& vhat,
                        Tensor3* prob_out) {
    require_same_shape(qhat, khat, "t_attention");
    require_same_shape(qhat, vhat, "t_attention");
    const int64_t n = qhat.rows, dh = qhat.cols, c = qhat.channels;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor3 out(n, dh, c);
    if (prob_out) *prob_out = Tensor3(n, n, c);
    std::vector<double> sq(n * dh), sk(n * dh), sv(n * dh), sp(n * n), so(n * dh);
    for (int64_t k = 0; k < c; ++k) {
        pack_slice(qhat, k, sq.data());
        pack_slice(khat, k, sk.data());
        pack_slice(vhat, k, sv.data());
        kernels::matmul_nt(sq.data(), sk.data(), sp.data(), n, dh, n);
        kernels::scale(scale, sp.data(), sp.data(), n * n);
        softmax_rows(sp.data(), n, n);
        kernels::matmul_nn(sp.data(), sv.data(), so.data(), n, n, dh);
        if (prob_out) unpack_slice(sp.data(), k, *prob_out);
        unpack_slice(so.data(), k, out);
    }
    return out;
}

Tensor3 t_mhsa_hat(const Tensor3& xhat, const HeadParams& p, AttentionCache* cache) {
    const int64_t h = p.heads();
    if (h < 1 || xhat.cols % h != 0) {
        throw std::invalid_argument("t_mhsa: embedding dim not divisible by head count");
    }
    std::vector<Tensor3> outputs;
    outputs.reserve(h);
    if (cache) {
        cache->q_hat.clear();
        cache->k_hat.clear();
        cache->v_hat.clear();
        cache->prob_hat.clear();
    }
    for (int64_t i = 0; i < h; ++i) {
        Tensor3 q = t_linear_hat(xhat, p.wq[i]);
        Tensor3 k = t_linear_hat(xhat, p.wk[i]);
        Tensor3 v = t_linear_hat(xhat, p.wv[i]);
        Tensor3 prob;
        outputs.push_back(t_attention_hat(q, k, v, cache ? &prob : nullptr));
        if (cache) {
            cache->q_hat.push_back(std::move(q));
            cache->k_hat.push_back(std::move(k));
            cache->v_hat.push_back(std::move(v));
            cache->prob_hat.push_back(std::move(prob));
        }
    }
    Tensor3 concat = concat_mode2(outputs);
    Tensor3 out = t_linear_hat(concat, p.wo);
    if (cache) cache->concat_hat = std::move(concat);
    return out;
}

Tensor3 t_ffn_hat(const Tensor3& xhat, const TLinearParams& p1, const TLinearParams& p2,
                  const DctPlan& plan, FfnCache* cache) {
    Tensor3 hidden_hat = t_linear_hat(xhat, p1);
    Tensor3 hidden = idct3(hidden_hat, plan);
    Tensor3 activated = gelu(hidden);
    Tensor3 ghat = dct3(activated, plan);
    Tensor3 out = t_linear_hat(ghat, p2);
    if (cache) {
        cache->hidden_spatial = std::move(hidden);
        cache->gelu_hat = std::move(ghat);
    }
    return out;
}

Tensor3 t_linear(const Tensor3& x, const TLinearParams& p, const DctPlan& plan) {
    return idct3(t_linear_hat(dct3(x, plan), p), plan);
}

Tensor3 t_softmax(const Tensor3& s, const DctPlan& plan) {
    return idct3(t_softmax_hat(dct3(s, plan)), plan);
}

Tensor3 t_attention(const Tensor3& q, const Tensor3& k, const Tensor3& v,
                    const DctPlan& plan) {
    return idct3(t_attention_hat(dct3(q, plan), dct3(k, plan), dct3(v, plan)), plan);
}

Tensor3 t_mhsa(const Tensor3& x, const HeadParams& p, const DctPlan& plan) {
    return idct3(t_mhsa_hat(dct3(x, plan), p), plan);
}

Tensor3 t_layernorm(const Tensor3& x, const TLayerNormParams& p, const DctPlan& plan) {
    return idct3(t_layernorm_hat(dct3(x, plan), p), plan);
}

Tensor3 t_ffn(const Tensor3& x, const TLinearParams& p1, const TLinearParams& p2,
              const DctPlan& plan) {
    return idct3(t_ffn_hat(dct3(x, plan), p1, p2, plan), plan);
}

}  // namespace tcpvit
