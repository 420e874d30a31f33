#include "tcpvit/model.hpp"

#include <cstring>
#include <stdexcept>

#include "tcpvit/kernels.hpp"
#include "tcpvit/rng.hpp"

namespace tcpvit {

Variant variant_from_string(const std::string& s) {
    if (s == "tcp") return Variant::Tcp;
    if (s == "std") return Variant::Std;
    throw std::invalid_argument("unknown variant '" + s + "' (expected tcp or std)");
}

const char* variant_to_string(Variant v) {
    return v == Variant::Tcp ? "tcp" : "std";
}

void ModelConfig::validate() const {
    if (img_h < 1 || img_w < 1 || channels < 1 || patch < 1 || heads < 1 ||
        layers < 1 || r_ff < 1 || num_classes < 1) {
        throw std::invalid_argument("ModelConfig: all dimensions must be positive");
    }
    if (img_h % patch != 0 || img_w % patch != 0) {
        throw std::invalid_argument("ModelConfig: image size not divisible by patch size");
    }
    if (model_dim() % heads != 0) {
        throw std::invalid_argument("ModelConfig: embedding dim " +
                                    std::to_string(model_dim()) +
                                    " not divisible by " + std::to_string(heads) +
                                    " heads");
    }
}

DctPlan model_plan(const ModelConfig& config) {
    return build_dct_plan(config.model_channels());
}

int64_t param_element_count(const EncoderParams& p) {
    int64_t total = 0;
    for_each_param(const_cast<EncoderParams&>(p),
                   [&](const std::string&, Tensor3& t) { total += t.size(); });
    return total;
}

EncoderParams zeros_like(const EncoderParams& p) {
    EncoderParams out = p;
    for_each_param(out, [](const std::string&, Tensor3& t) {
        std::fill(t.data.begin(), t.data.end(), 0.0);
    });
    return out;
}

Tensor3 patchify(const Tensor3& image, const ModelConfig& config) {
    if (image.rows != config.img_h || image.cols != config.img_w ||
        image.channels != config.channels) {
        throw shape_error("patchify: image shape " + image.shape_str() +
                          " does not match config");
    }
    const int64_t p = config.patch;
    const int64_t grid_w = config.img_w / p;
    const int64_t n = config.tokens();
    const int64_t d = config.patch_dim();
    Tensor3 out(n, d, config.channels);
    for (int64_t t = 0; t < n; ++t) {
        const int64_t r0 = (t / grid_w) * p;
        const int64_t c0 = (t % grid_w) * p;
        for (int64_t u = 0; u < p; ++u) {
            for (int64_t v = 0; v < p; ++v) {
                for (int64_t k = 0; k < config.channels; ++k) {
                    out(t, u * p + v, k) = image(r0 + u, c0 + v, k);
                }
            }
        }
    }
    return out;
}

Tensor3 unpatchify(const Tensor3& patches, const ModelConfig& config) {
    if (patches.rows != config.tokens() || patches.cols != config.patch_dim() ||
        patches.channels != config.channels) {
        throw shape_error("unpatchify: patch tensor shape " + patches.shape_str() +
                          " does not match config");
    }
    const int64_t p = config.patch;
    const int64_t grid_w = config.img_w / p;
    Tensor3 out(config.img_h, config.img_w, config.channels);
    for (int64_t t = 0; t < patches.rows; ++t) {
        const int64_t r0 = (t / grid_w) * p;
        const int64_t c0 = (t % grid_w) * p;
        for (int64_t u = 0; u < p; ++u) {
            for (int64_t v = 0; v < p; ++v) {
                for (int64_t k = 0; k < config.channels; ++k) {
                    out(r0 + u, c0 + v, k) = patches(t, u * p + v, k);
                }
            }
        }
    }
    return out;
}

namespace {

// Reinterprets N x d x C patches as N x (d*C) x 1; with the channel index
// fastest this is the row-major flattening of each patch and needs no copy
// beyond the buffer move.
Tensor3 flatten_patches(const Tensor3& patches) {
    Tensor3 out;
    out.rows = patches.rows;
    out.cols = patches.cols * patches.channels;
    out.channels = 1;
    out.data = patches.data;
    return out;
}

Tensor3 prepend_cls(const Tensor3& cls_hat, const Tensor3& xp_hat) {
    Tensor3 out(xp_hat.rows + 1, xp_hat.cols, xp_hat.channels);
    std::memcpy(out.data.data(), cls_hat.data.data(),
                cls_hat.data.size() * sizeof(double));
    std::memcpy(out.data.data() + cls_hat.data.size(), xp_hat.data.data(),
                xp_hat.data.size() * sizeof(double));
    return out;
}

// Embedding in the DCT domain: concat the stored cls row with the transformed
// patches and add the stored positional tensor. For Std the learned patch
// projection is applied first (C = 1, so hat and spatial coincide).
Tensor3 embed_hat(const Tensor3& xp, const EncoderParams& params,
                  const ModelConfig& config, const DctPlan& plan,
                  GradTape* tape) {
    Tensor3 xp_hat;
    if (config.variant == Variant::Std) {
        Tensor3 flat = flatten_patches(xp);
        if (tape) tape->patches_flat = flat;
        xp_hat = t_linear_hat(flat, *params.patch_proj);
    } else {
        xp_hat = dct3(xp, plan);
    }
    Tensor3 x0 = prepend_cls(params.cls, xp_hat);
    if (!x0.same_shape(params.pos)) {
        throw shape_error("embed: positional tensor shape " + params.pos.shape_str() +
                          " does not match tokens " + x0.shape_str());
    }
    kernels::add(x0.data.data(), params.pos.data.data(), x0.data.data(),
                 x0.data.size());
    return x0;
}

}  // namespace

Tensor3 embed(const Tensor3& xp, const EncoderParams& params,
              const ModelConfig& config, const DctPlan& plan) {
    return idct3(embed_hat(xp, params, config, plan, nullptr), plan);
}

Tensor3 block_forward_hat(const Tensor3& xhat, const LayerParams& layer,
                          const DctPlan& plan, BlockTape* tape) {
    if (tape) tape->x_hat = xhat;
    Tensor3 normed = t_layernorm_hat(xhat, layer.ln1, tape ? &tape->ln1_stats : nullptr);
    Tensor3 attn_out =
        t_mhsa_hat(normed, layer.attn, tape ? &tape->attn : nullptr);
    if (tape) tape->ln1_out = std::move(normed);
    Tensor3 y = add(xhat, attn_out);

    Tensor3 normed2 = t_layernorm_hat(y, layer.ln2, tape ? &tape->ln2_stats : nullptr);
    Tensor3 ffn_out = t_ffn_hat(normed2, layer.ffn1, layer.ffn2, plan,
                                tape ? &tape->ffn : nullptr);
    if (tape) {
        tape->ln2_out = std::move(normed2);
        tape->y_hat = y;
    }
    return add(y, ffn_out);
}

Tensor3 block_forward(const Tensor3& x, const LayerParams& layer, const DctPlan& plan) {
    return idct3(block_forward_hat(dct3(x, plan), layer, plan), plan);
}

std::vector<double> encoder_forward(const Tensor3& image, const EncoderParams& params,
                                    const ModelConfig& config, const DctPlan& plan,
                                    GradTape* tape) {
    config.validate();
    Tensor3 xp = patchify(image, config);
    Tensor3 x = embed_hat(xp, params, config, plan, tape);
    if (tape) {
        tape->x0_hat = x;
        tape->blocks.resize(config.layers);
    }
    for (int64_t l = 0; l < config.layers; ++l) {
        x = block_forward_hat(x, params.layers[l], plan,
                              tape ? &tape->blocks[l] : nullptr);
    }
    if (tape) tape->final_in_hat = x;
    Tensor3 out_hat =
        t_layernorm_hat(x, params.final_ln, tape ? &tape->final_stats : nullptr);

    // Head input: spatial cls row, flattened row-major over (feature, channel).
    Tensor3 cls_hat(1, out_hat.cols, out_hat.channels);
    std::memcpy(cls_hat.data.data(), out_hat.data.data(),
                cls_hat.data.size() * sizeof(double));
    Tensor3 cls_spatial = idct3(cls_hat, plan);
    Tensor3 flat;
    flat.rows = 1;
    flat.cols = cls_spatial.cols * cls_spatial.channels;
    flat.channels = 1;
    flat.data = cls_spatial.data;
    Tensor3 logits_t = t_linear_hat(flat, params.head);

    if (tape) {
        tape->encoder_out_hat = std::move(out_hat);
        tape->cls_spatial = std::move(cls_spatial);
        tape->logits = logits_t.data;
    }
    return logits_t.data;
}

namespace {

TLinearParams make_linear(int64_t din, int64_t dout, int64_t c, Rng& rng) {
    TLinearParams p;
    p.w = Tensor3(din, dout, c);
    for (double& v : p.w.data) v = rng.trunc_normal(0.02);
    p.b = Tensor3(1, dout, c);
    return p;
}

TLayerNormParams make_layernorm(int64_t d, int64_t c) {
    TLayerNormParams p;
    p.gamma = Tensor3(1, d, c);
    std::fill(p.gamma.data.begin(), p.gamma.data.end(), 1.0);
    p.beta = Tensor3(1, d, c);
    return p;
}

}  // namespace

EncoderParams init_params(const ModelConfig& config, uint64_t seed) {
    config.validate();
    const int64_t d = config.model_dim();
    const int64_t c = config.model_channels();
    const int64_t dh = config.head_dim();
    const int64_t dff = config.r_ff * d;
    Rng rng(seed);

    EncoderParams p;
    p.cls = Tensor3(1, d, c);
    p.pos = Tensor3(config.tokens() + 1, d, c);
    p.layers.resize(config.layers);
    for (LayerParams& layer : p.layers) {
        layer.ln1 = make_layernorm(d, c);
        for (int64_t h = 0; h < config.heads; ++h) {
            layer.attn.wq.push_back(make_linear(d, dh, c, rng));
            layer.attn.wk.push_back(make_linear(d, dh, c, rng));
            layer.attn.wv.push_back(make_linear(d, dh, c, rng));
        }
        layer.attn.wo = make_linear(d, d, c, rng);
        layer.ln2 = make_layernorm(d, c);
        layer.ffn1 = make_linear(d, dff, c, rng);
        layer.ffn2 = make_linear(dff, d, c, rng);
    }
    p.final_ln = make_layernorm(d, c);
    p.head = make_linear(d * c, config.num_classes, 1, rng);
    if (config.variant == Variant::Std) {
        p.patch_proj = make_linear(config.d_eff(), config.d_eff(), 1, rng);
    }
    return p;
}

}  // namespace tcpvit
