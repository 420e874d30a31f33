#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcpvit/layers.hpp"
#include "tcpvit/tensor.hpp"
#include "tcpvit/transform.hpp"

namespace tcpvit {

enum class Variant { Tcp, Std };

Variant variant_from_string(const std::string& s);
const char* variant_to_string(Variant v);

/// Architecture hyperparameters. `channels` is the image channel count; the
/// Std variant flattens each patch to d_eff = P^2 * channels and runs the same
/// tensor pipeline with a single channel, which makes every transform the
/// identity and recovers the ordinary matrix-based encoder.
struct ModelConfig {
    int64_t img_h = 32;
    int64_t img_w = 32;
    int64_t channels = 3;
    int64_t patch = 4;
    int64_t heads = 4;
    int64_t layers = 4;
    int64_t r_ff = 4;
    int64_t num_classes = 10;
    Variant variant = Variant::Tcp;
    uint64_t seed = 0;

    int64_t tokens() const { return (img_h / patch) * (img_w / patch); }
    int64_t patch_dim() const { return patch * patch; }
    int64_t d_eff() const { return patch_dim() * channels; }
    // Embedding dimension and channel count the encoder actually runs at.
    int64_t model_dim() const {
        return variant == Variant::Tcp ? patch_dim() : d_eff();
    }
    int64_t model_channels() const { return variant == Variant::Tcp ? channels : 1; }
    int64_t head_dim() const { return model_dim() / heads; }

    // Throws std::invalid_argument on divisibility or positivity violations.
    void validate() const;
};

DctPlan model_plan(const ModelConfig& config);

struct LayerParams {
    TLayerNormParams ln1;
    HeadParams attn;
    TLayerNormParams ln2;
    TLinearParams ffn1;
    TLinearParams ffn2;
};

struct EncoderParams {
    Tensor3 cls;  // 1 x d x C, stored in the DCT domain like every parameter
    Tensor3 pos;  // (N+1) x d x C
    std::vector<LayerParams> layers;
    TLayerNormParams final_ln;
    TLinearParams head;                      // (d*C) x num_classes at C=1
    std::optional<TLinearParams> patch_proj;  // Std variant only, d_eff x d_eff
};

// Visits every parameter tensor in a fixed, documented order: cls, pos, then
// per layer (ln1 gamma/beta, per-head wq/wk/wv weight+bias, wo weight+bias,
// ln2 gamma/beta, ffn1, ffn2), final_ln, head, patch_proj. Initialization
// draws, the optimizer state and checkpoints all follow this order.
template <typename Params, typename Fn>
void for_each_param(Params& p, Fn&& fn) {
    fn("cls", p.cls);
    fn("pos", p.pos);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        const std::string prefix = "layer" + std::to_string(l) + ".";
        fn(prefix + "ln1.gamma", layer.ln1.gamma);
        fn(prefix + "ln1.beta", layer.ln1.beta);
        for (size_t h = 0; h < layer.attn.wq.size(); ++h) {
            const std::string hp = prefix + "h" + std::to_string(h) + ".";
            fn(hp + "wq.w", layer.attn.wq[h].w);
            fn(hp + "wq.b", layer.attn.wq[h].b);
            fn(hp + "wk.w", layer.attn.wk[h].w);
            fn(hp + "wk.b", layer.attn.wk[h].b);
            fn(hp + "wv.w", layer.attn.wv[h].w);
            fn(hp + "wv.b", layer.attn.wv[h].b);
        }
        fn(prefix + "wo.w", layer.attn.wo.w);
        fn(prefix + "wo.b", layer.attn.wo.b);
        fn(prefix + "ln2.gamma", layer.ln2.gamma);
        fn(prefix + "ln2.beta", layer.ln2.beta);
        fn(prefix + "ffn1.w", layer.ffn1.w);
        fn(prefix + "ffn1.b", layer.ffn1.b);
        fn(prefix + "ffn2.w", layer.ffn2.w);
        fn(prefix + "ffn2.b", layer.ffn2.b);
    }
    fn("final_ln.gamma", p.final_ln.gamma);
    fn("final_ln.beta", p.final_ln.beta);
    fn("head.w", p.head.w);
    fn("head.b", p.head.b);
    if (p.patch_proj) {
        fn("patch_proj.w", p.patch_proj->w);
        fn("patch_proj.b", p.patch_proj->b);
    }
}

int64_t param_element_count(const EncoderParams& p);

// Gradients use the same container as the parameters.
EncoderParams zeros_like(const EncoderParams& p);

// Cached forward activations for the hand-written backward pass. All cached
// tensors live in the DCT domain unless noted.
struct BlockTape {
    Tensor3 x_hat;  // block input
    LnStats ln1_stats;
    Tensor3 ln1_out;
    AttentionCache attn;
    Tensor3 y_hat;  // after the attention residual
    LnStats ln2_stats;
    Tensor3 ln2_out;
    FfnCache ffn;
};

struct GradTape {
    Tensor3 patches_flat;       // Std variant: flattened patches before patch_proj
    Tensor3 x0_hat;             // embedding output
    std::vector<BlockTape> blocks;
    Tensor3 final_in_hat;       // last block output, input to the final normalization
    LnStats final_stats;
    Tensor3 encoder_out_hat;    // after the final normalization
    Tensor3 cls_spatial;        // 1 x d x C row fed to the head
    std::vector<double> logits;
};

// Splits the image into non-overlapping P x P patches: mode 1 scans the patch
// grid row-major, mode 2 the pixels inside a patch row-major, mode 3 channels.
Tensor3 patchify(const Tensor3& image, const ModelConfig& config);
Tensor3 unpatchify(const Tensor3& patches, const ModelConfig& config);

// Prepends the classification token and adds positional embeddings (Std:
// flattens patches and applies the learned projection first). Spatial in/out.
Tensor3 embed(const Tensor3& xp, const EncoderParams& params,
              const ModelConfig& config, const DctPlan& plan);

// Pre-norm residual block, spatial in/out:
// y = x + t_mhsa(t_ln(x)); out = y + t_ffn(t_ln(y)).
Tensor3 block_forward(const Tensor3& x, const LayerParams& layer, const DctPlan& plan);

// DCT-domain block used by the fused encoder path.
Tensor3 block_forward_hat(const Tensor3& xhat, const LayerParams& layer,
                          const DctPlan& plan, BlockTape* tape = nullptr);

// Full forward pass: patchify -> embed -> L blocks -> final normalization ->
// cls row -> affine head. Activations stay in the DCT domain between the
// embedding and the final normalization, crossing only at each GELU.
std::vector<double> encoder_forward(const Tensor3& image, const EncoderParams& params,
                                    const ModelConfig& config, const DctPlan& plan,
                                    GradTape* tape = nullptr);

// Weights ~ truncated normal(0, 0.02) in their stored domain; biases and
// embeddings zero; gamma one, beta zero. Deterministic given the seed.
EncoderParams init_params(const ModelConfig& config, uint64_t seed);

}  // namespace tcpvit
