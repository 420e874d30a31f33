#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tcpvit/model.hpp"

namespace tcpvit {

// Reverse-mode gradients for every layer. Everything below operates on
// DCT-domain tensors (the domain the parameters are stored and updated in);
// where a contract involves a spatial quantity the adjoint of the transform
// is applied explicitly (the adjoint of dct3 is idct3 and vice versa).

struct TLinearGrads {
    Tensor3 w;
    Tensor3 b;
};

// dW^(k) = X^(k)^T dY^(k), dX^(k) = dY^(k) W^(k)^T, db^(k) = column sums of
// dY^(k), all slice-wise. `x_hat` is the cached DCT-domain layer input.
void t_linear_backward_hat(const Tensor3& dy_hat, const Tensor3& x_hat,
                           const TLinearParams& p, Tensor3* dx_hat,
                           TLinearGrads* grads);

// Spatial-domain wrapper: takes the upstream gradient and cached input in the
// spatial domain, returns dX in the spatial domain; dW/db stay in the stored
// (DCT) domain.
void t_linear_backward(const Tensor3& dy, const Tensor3& x, const TLinearParams& p,
                       const DctPlan& plan, Tensor3* dx, TLinearGrads* grads);

// Row-wise softmax Jacobian applied per DCT-domain slice.
Tensor3 t_softmax_backward(const Tensor3& dprob_hat, const Tensor3& prob_hat);

// Backward of t_layernorm_hat; accumulates dgamma/dbeta and returns dX.
Tensor3 t_layernorm_backward(const Tensor3& dy_hat, const Tensor3& x_hat,
                             const LnStats& stats, const TLayerNormParams& p,
                             Tensor3* dgamma, Tensor3* dbeta);

Tensor3 gelu_backward(const Tensor3& dy, const Tensor3& x);

// Backward of t_attention_hat given the cached projections and softmax output.
void t_attention_backward(const Tensor3& dout_hat, const Tensor3& q_hat,
                          const Tensor3& k_hat, const Tensor3& v_hat,
                          const Tensor3& prob_hat, Tensor3* dq, Tensor3* dk,
                          Tensor3* dv);

struct HeadGrads {
    std::vector<TLinearGrads> wq, wk, wv;
    TLinearGrads wo;
};

Tensor3 t_mhsa_backward(const Tensor3& dout_hat, const Tensor3& x_hat,
                        const AttentionCache& cache, const HeadParams& p,
                        HeadGrads* grads);

void t_ffn_backward(const Tensor3& dout_hat, const Tensor3& x_hat, const FfnCache& cache,
                    const TLinearParams& p1, const TLinearParams& p2,
                    const DctPlan& plan, Tensor3* dx_hat, TLinearGrads* g1,
                    TLinearGrads* g2);

// Backward through one pre-norm block; accumulates parameter gradients into
// `grads` (same container type as the parameters) and returns dX.
Tensor3 block_backward(const Tensor3& dout_hat, const BlockTape& tape,
                       const LayerParams& layer, const DctPlan& plan,
                       LayerParams& grads);

// Full-model backward from dlogits; returns gradients shaped like the params.
EncoderParams encoder_backward(const std::vector<double>& dlogits,
                               const GradTape& tape, const EncoderParams& params,
                               const ModelConfig& config, const DctPlan& plan);

// ---------------------------------------------------------------------------
// Loss and optimizer.
// ---------------------------------------------------------------------------

struct LossResult {
    double loss;
    std::vector<double> dlogits;
};

// -log softmax(logits)[label], stable log-sum-exp; gradient softmax - onehot.
LossResult cross_entropy(const std::vector<double>& logits, int64_t label);

struct OptimState {
    std::vector<std::vector<double>> m;  // first moments, for_each_param order
    std::vector<std::vector<double>> v;  // second moments
    int64_t step = 0;
};

OptimState make_optim_state(const EncoderParams& params);

// AdamW with decoupled weight decay and bias-corrected moments.
void adamw_step(EncoderParams& params, const EncoderParams& grads, OptimState& state,
                double lr, double weight_decay, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

// lr_max * 0.5 * (1 + cos(pi * step / total_steps)); no warmup.
double cosine_schedule(int64_t step, int64_t total_steps, double lr_max);

double global_grad_norm(const EncoderParams& grads);

// Scales all gradients so the global L2 norm is at most max_norm.
void clip_gradients(EncoderParams& grads, double max_norm);

// Fixed-order list of (name, tensor) pairs; the alignment contract between
// parameters, gradients and optimizer state.
std::vector<std::pair<std::string, Tensor3*>> collect_params(EncoderParams& params);

// ---------------------------------------------------------------------------
// Finite-difference oracle.
// ---------------------------------------------------------------------------

struct GradCheckResult {
    std::string group;   // parameter tensor name
    double max_rel_err;  // vs central differences, denom max(|a|, |n|, 1e-8)
};

// Compares encoder_backward against central finite differences of the
// cross-entropy loss on one random input, linearizing at a random point in
// parameter space (every tensor perturbed, so no path is degenerate).
std::vector<GradCheckResult> gradient_check(const ModelConfig& config, uint64_t seed,
                                            double step = 1e-5);

}  // namespace tcpvit
