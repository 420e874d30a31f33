#pragma once

#include <cstdint>
#include <string>

#include "tcpvit/model.hpp"

namespace tcpvit {

/// Closed-form parameter counts for one variant of the architecture. All
/// fields are exact integers; grand_total always equals the element count of
/// the EncoderParams the same config constructs.
struct ParamBreakdown {
    // Per layer.
    int64_t mhsa_weights = 0;  // (4) * d^2 * C, or * C^2 flattened for Std
    int64_t ffn_weights = 0;   // 2 * r_ff * d^2 * C
    int64_t ln = 0;            // 4 * d * C
    int64_t biases = 0;        // (5 + r_ff) * d * C
    int64_t per_layer_total = 0;
    // Whole encoder: L layers plus the final normalization.
    int64_t final_ln = 0;
    int64_t encoder_total = 0;
    // Embeddings and tokens.
    int64_t pos = 0;
    int64_t cls = 0;
    int64_t patch_proj = 0;  // Std variant only
    int64_t embeddings_tokens = 0;
    // Classification head.
    int64_t head = 0;
    int64_t grand_total = 0;
};

ParamBreakdown count_params(const ModelConfig& config);

struct FlopsReport {
    double tcp_flops = 0.0;  // one layer, C slice products at dimension d
    double std_flops = 0.0;  // one layer at dimension d*C
    double alpha = 0.0;      // per-token projection cost coefficient (8+2r_ff)d
    double ratio = 0.0;      // (alpha + 4N) / (alpha C + 4N)
    // Mode-3 transform cost, reported separately and excluded from the ratio.
    double transform_overhead = 0.0;
};

FlopsReport flops_model(const ModelConfig& config, int64_t tokens);

enum class ReportFormat { Table, Csv, Json };

ReportFormat report_format_from_string(const std::string& s);

// Side-by-side Std/TCP table with a Ratio column.
std::string param_comparison_table(const ParamBreakdown& std_counts,
                                   const ParamBreakdown& tcp_counts);

std::string breakdown_to_csv(const ParamBreakdown& b);
ParamBreakdown breakdown_from_csv(const std::string& csv);
std::string breakdown_to_json(const ParamBreakdown& b);

std::string flops_to_table(const FlopsReport& r);
std::string flops_to_csv(const FlopsReport& r);
std::string flops_to_json(const FlopsReport& r);

}  // namespace tcpvit
