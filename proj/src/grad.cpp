#include "tcpvit/grad.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "tcpvit/kernels.hpp"

namespace tcpvit {

namespace {

// Per-slice C = A^T * B on packed slices: A is m x n x C, B is m x l x C,
// result n x l x C.
Tensor3 slicewise_tn(const Tensor3& a, const Tensor3& b) {
    Tensor3 out(a.cols, b.cols, a.channels);
    std::vector<double> sa(a.rows * a.cols), sb(b.rows * b.cols), sc(out.rows * out.cols);
    for (int64_t k = 0; k < a.channels; ++k) {
        pack_slice(a, k, sa.data());
        pack_slice(b, k, sb.data());
        kernels::matmul_tn(sa.data(), sb.data(), sc.data(), a.cols, a.rows, b.cols);
        unpack_slice(sc.data(), k, out);
    }
    return out;
}

// Per-slice C = A * B^T: A is m x n x C, B is l x n x C, result m x l x C.
Tensor3 slicewise_nt(const Tensor3& a, const Tensor3& b) {
    Tensor3 out(a.rows, b.rows, a.channels);
    std::vector<double> sa(a.rows * a.cols), sb(b.rows * b.cols), sc(out.rows * out.cols);
    for (int64_t k = 0; k < a.channels; ++k) {
        pack_slice(a, k, sa.data());
        pack_slice(b, k, sb.data());
        kernels::matmul_nt(sa.data(), sb.data(), sc.data(), a.rows, a.cols, b.rows);
        unpack_slice(sc.data(), k, out);
    }
    return out;
}

Tensor3 slicewise_nn(const Tensor3& a, const Tensor3& b) {
    Tensor3 out(a.rows, b.cols, a.channels);
    std::vector<double> sa(a.rows * a.cols), sb(b.rows * b.cols), sc(out.rows * out.cols);
    for (int64_t k = 0; k < a.channels; ++k) {
        pack_slice(a, k, sa.data());
        pack_slice(b, k, sb.data());
        kernels::matmul_nn(sa.data(), sb.data(), sc.data(), a.rows, a.cols, b.cols);
        unpack_slice(sc.data(), k, out);
    }
    return out;
}

void accumulate(Tensor3& dst, const Tensor3& src) {
    require_same_shape(dst, src, "grad accumulate");
    kernels::add(dst.data.data(), src.data.data(), dst.data.data(), dst.data.size());
}

}  // namespace

void t_linear_backward_hat(const Tensor3& dy_hat, const Tensor3& x_hat,
                           const TLinearParams& p, Tensor3* dx_hat,
                           TLinearGrads* grads) {
    if (dy_hat.rows != x_hat.rows || dy_hat.cols != p.w.cols ||
        dy_hat.channels != x_hat.channels) {
        throw shape_error("t_linear_backward: upstream gradient shape " +
                          dy_hat.shape_str() + " does not match tape");
    }
    if (grads) {
        grads->w = slicewise_tn(x_hat, dy_hat);
        grads->b = Tensor3(1, dy_hat.cols, dy_hat.channels);
        for (int64_t i = 0; i < dy_hat.rows; ++i) {
            for (int64_t j = 0; j < dy_hat.cols; ++j) {
                for (int64_t k = 0; k < dy_hat.channels; ++k) {
                    grads->b(0, j, k) += dy_hat(i, j, k);
                }
            }
        }
    }
    if (dx_hat) {
        *dx_hat = slicewise_nt(dy_hat, p.w);
    }
}

void t_linear_backward(const Tensor3& dy, const Tensor3& x, const TLinearParams& p,
                       const DctPlan& plan, Tensor3* dx, TLinearGrads* grads) {
    const Tensor3 dy_hat = dct3(dy, plan);
    const Tensor3 x_hat = dct3(x, plan);
    Tensor3 dx_hat;
    t_linear_backward_hat(dy_hat, x_hat, p, dx ? &dx_hat : nullptr, grads);
    if (dx) *dx = idct3(dx_hat, plan);
}

Tensor3 t_softmax_backward(const Tensor3& dprob_hat, const Tensor3& prob_hat) {
    require_same_shape(dprob_hat, prob_hat, "t_softmax_backward");
    Tensor3 ds(prob_hat.rows, prob_hat.cols, prob_hat.channels);
    for (int64_t k = 0; k < prob_hat.channels; ++k) {
        for (int64_t i = 0; i < prob_hat.rows; ++i) {
            double dot = 0.0;
            for (int64_t j = 0; j < prob_hat.cols; ++j) {
                dot += dprob_hat(i, j, k) * prob_hat(i, j, k);
            }
            for (int64_t j = 0; j < prob_hat.cols; ++j) {
                ds(i, j, k) = prob_hat(i, j, k) * (dprob_hat(i, j, k) - dot);
            }
        }
    }
    return ds;
}

Tensor3 t_layernorm_backward(const Tensor3& dy_hat, const Tensor3& x_hat,
                             const LnStats& stats, const TLayerNormParams& p,
                             Tensor3* dgamma, Tensor3* dbeta) {
    require_same_shape(dy_hat, x_hat, "t_layernorm_backward");
    const int64_t n = x_hat.rows, d = x_hat.cols, c = x_hat.channels;
    Tensor3 dx(n, d, c);
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t k = 0; k < c; ++k) {
            const double mu = stats.mu[i * c + k];
            const double sigma = stats.sigma[i * c + k];
            const double s = sigma + p.eps;
            double gsum = 0.0;   // sum of gamma-weighted upstream grads
            double gdot = 0.0;   // their projection onto the centered input
            for (int64_t j = 0; j < d; ++j) {
                const double g = dy_hat(i, j, k) * p.gamma(0, j, k);
                gsum += g;
                gdot += g * (x_hat(i, j, k) - mu);
            }
            const double mean_g = gsum / static_cast<double>(d);
            // d sigma / d x_l = (x_l - mu) / (d * sigma); zero when sigma = 0.
            const double sigma_coeff =
                sigma > 0.0 ? gdot / (s * s * static_cast<double>(d) * sigma) : 0.0;
            for (int64_t j = 0; j < d; ++j) {
                const double g = dy_hat(i, j, k) * p.gamma(0, j, k);
                const double centered = x_hat(i, j, k) - mu;
                dx(i, j, k) = (g - mean_g) / s - sigma_coeff * centered;
                if (dgamma) {
                    (*dgamma)(0, j, k) += dy_hat(i, j, k) * centered / s;
                }
                if (dbeta) {
                    (*dbeta)(0, j, k) += dy_hat(i, j, k);
                }
            }
        }
    }
    return dx;
}

Tensor3 gelu_backward(const Tensor3& dy, const Tensor3& x) {
    require_same_shape(dy, x, "gelu_backward");
    Tensor3 dx(x.rows, x.cols, x.channels);
    for (size_t i = 0; i < x.data.size(); ++i) {
        dx.data[i] = dy.data[i] * gelu_grad(x.data[i]);
    }
    return dx;
}

void t_attention_backward(const Tensor3& dout_hat, const Tensor3& q_hat,
                          const Tensor3& k_hat, const Tensor3& v_hat,
                          const Tensor3& prob_hat, Tensor3* dq, Tensor3* dk,
                          Tensor3* dv) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(q_hat.cols));
    // O = P V  ->  dP = dO V^T, dV = P^T dO.
    Tensor3 dprob = slicewise_nt(dout_hat, v_hat);
    if (dv) *dv = slicewise_tn(prob_hat, dout_hat);
    // P = softmax(S) row-wise per slice.
    Tensor3 ds = t_softmax_backward(dprob, prob_hat);
    // S = scale * Q K^T  ->  dQ = scale * dS K, dK = scale * dS^T Q.
    if (dq) {
        *dq = slicewise_nn(ds, k_hat);
        kernels::scale(scale, dq->data.data(), dq->data.data(), dq->data.size());
    }
    if (dk) {
        *dk = slicewise_tn(ds, q_hat);
        kernels::scale(scale, dk->data.data(), dk->data.data(), dk->data.size());
    }
}

Tensor3 t_mhsa_backward(const Tensor3& dout_hat, const Tensor3& x_hat,
                        const AttentionCache& cache, const HeadParams& p,
                        HeadGrads* grads) {
    const int64_t h = p.heads();
    const int64_t dh = p.wq[0].w.cols;
    // Output projection.
    Tensor3 dconcat;
    t_linear_backward_hat(dout_hat, cache.concat_hat, p.wo, &dconcat,
                          grads ? &grads->wo : nullptr);
    if (grads) {
        grads->wq.resize(h);
        grads->wk.resize(h);
        grads->wv.resize(h);
    }
    Tensor3 dx = zeros_like(x_hat);
    for (int64_t i = 0; i < h; ++i) {
        // Slice head i's block out of the mode-2 concatenation.
        Tensor3 dhead(dconcat.rows, dh, dconcat.channels);
        for (int64_t r = 0; r < dconcat.rows; ++r) {
            for (int64_t j = 0; j < dh; ++j) {
                for (int64_t k = 0; k < dconcat.channels; ++k) {
                    dhead(r, j, k) = dconcat(r, i * dh + j, k);
                }
            }
        }
        Tensor3 dq, dk, dv;
        t_attention_backward(dhead, cache.q_hat[i], cache.k_hat[i], cache.v_hat[i],
                             cache.prob_hat[i], &dq, &dk, &dv);
        Tensor3 dxq, dxk, dxv;
        t_linear_backward_hat(dq, x_hat, p.wq[i], &dxq, grads ? &grads->wq[i] : nullptr);
        t_linear_backward_hat(dk, x_hat, p.wk[i], &dxk, grads ? &grads->wk[i] : nullptr);
        t_linear_backward_hat(dv, x_hat, p.wv[i], &dxv, grads ? &grads->wv[i] : nullptr);
        accumulate(dx, dxq);
        accumulate(dx, dxk);
        accumulate(dx, dxv);
    }
    return dx;
}

void t_ffn_backward(const Tensor3& dout_hat, const Tensor3& x_hat, const FfnCache& cache,
                    const TLinearParams& p1, const TLinearParams& p2,
                    const DctPlan& plan, Tensor3* dx_hat, TLinearGrads* g1,
                    TLinearGrads* g2) {
    Tensor3 dg_hat;
    t_linear_backward_hat(dout_hat, cache.gelu_hat, p2, &dg_hat, g2);
    // The GELU was applied in the spatial domain; cross back for its Jacobian.
    Tensor3 dg = idct3(dg_hat, plan);
    Tensor3 dhidden = gelu_backward(dg, cache.hidden_spatial);
    Tensor3 dhidden_hat = dct3(dhidden, plan);
    t_linear_backward_hat(dhidden_hat, x_hat, p1, dx_hat, g1);
}

Tensor3 block_backward(const Tensor3& dout_hat, const BlockTape& tape,
                       const LayerParams& layer, const DctPlan& plan,
                       LayerParams& grads) {
    // out = y + ffn(ln2(y))
    Tensor3 dln2_out;
    {
        TLinearGrads g1, g2;
        t_ffn_backward(dout_hat, tape.ln2_out, tape.ffn, layer.ffn1, layer.ffn2, plan,
                       &dln2_out, &g1, &g2);
        accumulate(grads.ffn1.w, g1.w);
        accumulate(grads.ffn1.b, g1.b);
        accumulate(grads.ffn2.w, g2.w);
        accumulate(grads.ffn2.b, g2.b);
    }
    Tensor3 dy = t_layernorm_backward(dln2_out, tape.y_hat, tape.ln2_stats, layer.ln2,
                                      &grads.ln2.gamma, &grads.ln2.beta);
    accumulate(dy, dout_hat);

    // y = x + mhsa(ln1(x))
    HeadGrads hg;
    Tensor3 dln1_out = t_mhsa_backward(dy, tape.ln1_out, tape.attn, layer.attn, &hg);
    for (int64_t i = 0; i < layer.attn.heads(); ++i) {
        accumulate(grads.attn.wq[i].w, hg.wq[i].w);
        accumulate(grads.attn.wq[i].b, hg.wq[i].b);
        accumulate(grads.attn.wk[i].w, hg.wk[i].w);
        accumulate(grads.attn.wk[i].b, hg.wk[i].b);
        accumulate(grads.attn.wv[i].w, hg.wv[i].w);
        accumulate(grads.attn.wv[i].b, hg.wv[i].b);
    }
    accumulate(grads.attn.wo.w, hg.wo.w);
    accumulate(grads.attn.wo.b, hg.wo.b);

    Tensor3 dx = t_layernorm_backward(dln1_out, tape.x_hat, tape.ln1_stats, layer.ln1,
                                      &grads.ln1.gamma, &grads.ln1.beta);
    accumulate(dx, dy);
    return dx;
}

EncoderParams encoder_backward(const std::vector<double>& dlogits,
                               const GradTape& tape, const EncoderParams& params,
                               const ModelConfig& config, const DctPlan& plan) {
    EncoderParams grads = zeros_like(params);

    // Head: logits = cls_flat * W + b at a single channel.
    const int64_t dc = params.head.w.rows;
    Tensor3 dlogits_t(1, params.head.w.cols, 1,
                      std::vector<double>(dlogits.begin(), dlogits.end()));
    Tensor3 flat;
    flat.rows = 1;
    flat.cols = dc;
    flat.channels = 1;
    flat.data = tape.cls_spatial.data;
    Tensor3 dflat;
    {
        TLinearGrads hg;
        t_linear_backward_hat(dlogits_t, flat, params.head, &dflat, &hg);
        grads.head.w = std::move(hg.w);
        grads.head.b = std::move(hg.b);
    }

    // Undo the flatten and cross into the DCT domain (adjoint of idct3).
    Tensor3 dcls_spatial;
    dcls_spatial.rows = 1;
    dcls_spatial.cols = tape.cls_spatial.cols;
    dcls_spatial.channels = tape.cls_spatial.channels;
    dcls_spatial.data = std::move(dflat.data);
    Tensor3 dcls_hat = dct3(dcls_spatial, plan);

    // Only the cls row feeds the head.
    Tensor3 dout_hat = zeros_like(tape.encoder_out_hat);
    std::memcpy(dout_hat.data.data(), dcls_hat.data.data(),
                dcls_hat.data.size() * sizeof(double));

    Tensor3 dx = t_layernorm_backward(dout_hat, tape.final_in_hat, tape.final_stats,
                                      params.final_ln, &grads.final_ln.gamma,
                                      &grads.final_ln.beta);

    for (int64_t l = config.layers - 1; l >= 0; --l) {
        dx = block_backward(dx, tape.blocks[l], params.layers[l], plan,
                            grads.layers[l]);
    }

    // Embedding: x0 = [cls; xp_hat] + pos.
    accumulate(grads.pos, dx);
    std::memcpy(grads.cls.data.data(), dx.data.data(),
                grads.cls.data.size() * sizeof(double));
    if (config.variant == Variant::Std) {
        // Patch rows feed the learned projection.
        Tensor3 dproj(dx.rows - 1, dx.cols, dx.channels);
        std::memcpy(dproj.data.data(), dx.data.data() + grads.cls.data.size(),
                    dproj.data.size() * sizeof(double));
        TLinearGrads pg;
        t_linear_backward_hat(dproj, tape.patches_flat, *params.patch_proj, nullptr,
                              &pg);
        grads.patch_proj->w = std::move(pg.w);
        grads.patch_proj->b = std::move(pg.b);
    }
    return grads;
}

LossResult cross_entropy(const std::vector<double>& logits, int64_t label) {
    if (label < 0 || label >= static_cast<int64_t>(logits.size())) {
        throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                                " out of range for " + std::to_string(logits.size()) +
                                " classes");
    }
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    LossResult r;
    r.loss = lse - logits[label];
    r.dlogits.resize(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        r.dlogits[i] = std::exp(logits[i] - lse);
    }
    r.dlogits[label] -= 1.0;
    return r;
}

std::vector<std::pair<std::string, Tensor3*>> collect_params(EncoderParams& params) {
    std::vector<std::pair<std::string, Tensor3*>> out;
    for_each_param(params, [&](const std::string& name, Tensor3& t) {
        out.emplace_back(name, &t);
    });
    return out;
}

OptimState make_optim_state(const EncoderParams& params) {
    OptimState s;
    for_each_param(const_cast<EncoderParams&>(params),
                   [&](const std::string&, Tensor3& t) {
                       s.m.emplace_back(t.data.size(), 0.0);
                       s.v.emplace_back(t.data.size(), 0.0);
                   });
    return s;
}

void adamw_step(EncoderParams& params, const EncoderParams& grads, OptimState& state,
                double lr, double weight_decay, double beta1, double beta2,
                double eps) {
    auto p = collect_params(params);
    auto g = collect_params(const_cast<EncoderParams&>(grads));
    if (p.size() != g.size() || p.size() != state.m.size()) {
        throw std::invalid_argument("adamw_step: parameter/gradient/state mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t t = 0; t < p.size(); ++t) {
        std::vector<double>& w = p[t].second->data;
        const std::vector<double>& dw = g[t].second->data;
        std::vector<double>& m = state.m[t];
        std::vector<double>& v = state.v[t];
        for (size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * dw[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * dw[i] * dw[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * w[i]);
        }
    }
}

double cosine_schedule(int64_t step, int64_t total_steps, double lr_max) {
    if (total_steps <= 0) return lr_max;
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_max * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
}

double global_grad_norm(const EncoderParams& grads) {
    double sum = 0.0;
    for_each_param(const_cast<EncoderParams&>(grads),
                   [&](const std::string&, Tensor3& t) {
                       for (double v : t.data) sum += v * v;
                   });
    return std::sqrt(sum);
}

void clip_gradients(EncoderParams& grads, double max_norm) {
    const double norm = global_grad_norm(grads);
    if (norm <= max_norm || norm == 0.0) return;
    const double f = max_norm / norm;
    for_each_param(grads, [&](const std::string&, Tensor3& t) {
        kernels::scale(f, t.data.data(), t.data.data(), t.data.size());
    });
}

std::vector<GradCheckResult> gradient_check(const ModelConfig& config, uint64_t seed,
                                            double step) {
    const DctPlan plan = model_plan(config);
    EncoderParams params = init_params(config, seed);
    Rng rng(seed ^ 0x67ad5eedULL);
    // Linearize at a generic point: the zero biases and embeddings of a fresh
    // initialization park the cls row on the sigma = 0 kink of the (sigma+eps)
    // normalization, where central differences are meaningless.
    for_each_param(params, [&](const std::string& name, Tensor3& t) {
        const bool is_gamma = name.size() >= 5 &&
                              name.compare(name.size() - 5, 5, "gamma") == 0;
        for (double& v : t.data) v = (is_gamma ? 1.0 : 0.0) + 0.3 * rng.normal();
    });
    Tensor3 image(config.img_h, config.img_w, config.channels);
    for (double& v : image.data) v = rng.normal();
    const int64_t label = static_cast<int64_t>(rng.next_u64() % config.num_classes);

    GradTape tape;
    const std::vector<double> logits =
        encoder_forward(image, params, config, plan, &tape);
    const LossResult ce = cross_entropy(logits, label);
    EncoderParams grads = encoder_backward(ce.dlogits, tape, params, config, plan);

    auto ptensors = collect_params(params);
    auto gtensors = collect_params(grads);
    std::vector<GradCheckResult> results;
    results.reserve(ptensors.size());
    for (size_t t = 0; t < ptensors.size(); ++t) {
        double worst = 0.0;
        Tensor3& tensor = *ptensors[t].second;
        for (size_t i = 0; i < tensor.data.size(); ++i) {
            const double saved = tensor.data[i];
            tensor.data[i] = saved + step;
            const double up =
                cross_entropy(encoder_forward(image, params, config, plan), label).loss;
            tensor.data[i] = saved - step;
            const double down =
                cross_entropy(encoder_forward(image, params, config, plan), label).loss;
            tensor.data[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = gtensors[t].second->data[i];
            const double denom =
                std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
            worst = std::max(worst, std::fabs(numeric - analytic) / denom);
        }
        results.push_back({ptensors[t].first, worst});
    }
    return results;
}

}  // namespace tcpvit
