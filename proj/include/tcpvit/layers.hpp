#pragma once

#include <cstdint>
#include <vector>

#include "tcpvit/ctensor.hpp"
#include "tcpvit/tensor.hpp"
#include "tcpvit/transform.hpp"

namespace tcpvit {

// All learnable weights and biases are stored in the DCT domain: those are the
// only values the slice-wise products ever touch. Spatial-domain versions are
// recoverable with idct3 but never needed by the forward or backward pass.

struct TLinearParams {
    Tensor3 w;  // d_in x d_out x C
    Tensor3 b;  // 1 x d_out x C
};

struct TLayerNormParams {
    Tensor3 gamma;  // 1 x d x C
    Tensor3 beta;   // 1 x d x C
    double eps = 1e-5;
};

struct HeadParams {
    std::vector<TLinearParams> wq, wk, wv;  // one d x d_h x C projection per head
    TLinearParams wo;                       // d x d x C
    int64_t heads() const { return static_cast<int64_t>(wq.size()); }
};

// Exact GELU, x * Phi(x) with the standard normal CDF via erf.
double gelu(double x);
// Derivative Phi(x) + x * phi(x).
double gelu_grad(double x);
Tensor3 gelu(const Tensor3& x);

// Per-token, per-slice mean and sigma + eps captured during normalization;
// indexed by token * channels + slice.
struct LnStats {
    std::vector<double> mu;
    std::vector<double> sigma;  // population std dev, before eps
};

// DCT-domain building blocks. These take and return DCT-domain tensors and
// are the pieces the fused encoder path is made of.
Tensor3 t_linear_hat(const Tensor3& xhat, const TLinearParams& p);
Tensor3 t_softmax_hat(const Tensor3& shat);
Tensor3 t_layernorm_hat(const Tensor3& xhat, const TLayerNormParams& p,
                        LnStats* stats = nullptr);

struct AttentionCache {
    std::vector<Tensor3> q_hat, k_hat, v_hat;  // per head, N x d_h x C
    std::vector<Tensor3> prob_hat;             // per head, N x N x C softmax output
    Tensor3 concat_hat;                        // N x d x C head concatenation
};

Tensor3 t_attention_hat(const Tensor3& qhat, const Tensor3& khat, const Tensor3& vhat,
                        Tensor3* prob_out = nullptr);
Tensor3 t_mhsa_hat(const Tensor3& xhat, const HeadParams& p,
                   AttentionCache* cache = nullptr);

struct FfnCache {
    Tensor3 hidden_spatial;  // pre-GELU activation, spatial domain
    Tensor3 gelu_hat;        // post-GELU, back in the DCT domain
};

// The GELU only exists in the spatial domain, so the hat form still crosses
// domains between the two products.
Tensor3 t_ffn_hat(const Tensor3& xhat, const TLinearParams& p1, const TLinearParams& p2,
                  const DctPlan& plan, FfnCache* cache = nullptr);

// Spatial-domain operations as defined; each one is dct3 -> hat op -> idct3.
Tensor3 t_linear(const Tensor3& x, const TLinearParams& p, const DctPlan& plan);
Tensor3 t_softmax(const Tensor3& s, const DctPlan& plan);
Tensor3 t_attention(const Tensor3& q, const Tensor3& k, const Tensor3& v,
                    const DctPlan& plan);
Tensor3 t_mhsa(const Tensor3& x, const HeadParams& p, const DctPlan& plan);
Tensor3 t_layernorm(const Tensor3& x, const TLayerNormParams& p, const DctPlan& plan);
Tensor3 t_ffn(const Tensor3& x, const TLinearParams& p1, const TLinearParams& p2,
              const DctPlan& plan);

}  // namespace tcpvit
