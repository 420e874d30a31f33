#include "tcpvit/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tcpvit {

ParamBreakdown count_params(const ModelConfig& config) {
    config.validate();
    const int64_t d = config.model_dim();
    const int64_t c = config.model_channels();
    const int64_t r = config.r_ff;
    const int64_t n = config.tokens();

    ParamBreakdown b;
    b.mhsa_weights = 4 * d * d * c;
    b.ffn_weights = 2 * r * d * d * c;
    b.ln = 4 * d * c;
    // Per-head q/k/v biases (3 H d_h C = 3 d C) plus the output projection,
    // then the two FFN biases (r_ff d C + d C).
    b.biases = (5 + r) * d * c;
    b.per_layer_total = b.mhsa_weights + b.ffn_weights + b.ln + b.biases;
    b.final_ln = 2 * d * c;
    b.encoder_total = config.layers * b.per_layer_total + b.final_ln;
    b.pos = (n + 1) * d * c;
    b.cls = d * c;
    b.patch_proj = config.variant == Variant::Std
                       ? config.d_eff() * config.d_eff() + config.d_eff()
                       : 0;
    b.embeddings_tokens = b.pos + b.cls + b.patch_proj;
    b.head = d * c * config.num_classes + config.num_classes;
    b.grand_total = b.encoder_total + b.embeddings_tokens + b.head;
    return b;
}

FlopsReport flops_model(const ModelConfig& config, int64_t tokens) {
    if (tokens < 1) {
        throw std::invalid_argument("flops_model: token count must be >= 1");
    }
    const double d = static_cast<double>(config.patch_dim());
    const double c = static_cast<double>(config.channels);
    const double r = static_cast<double>(config.r_ff);
    const double n = static_cast<double>(tokens);

    const auto layer_flops = [&](double delta) {
        return (8.0 * delta * delta + 2.0 * r * delta * delta) * n +
               4.0 * n * n * delta;
    };

    FlopsReport rep;
    rep.tcp_flops = c * layer_flops(d);
    rep.std_flops = layer_flops(d * c);
    rep.alpha = (8.0 + 2.0 * r) * d;
    rep.ratio = (rep.alpha + 4.0 * n) / (rep.alpha * c + 4.0 * n);
    rep.transform_overhead = 2.0 * n * d * c * std::log2(std::max(c, 1.0));
    return rep;
}

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "table") return ReportFormat::Table;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw std::invalid_argument("unknown report format '" + s +
                                "' (expected table, csv or json)");
}

namespace {

struct Field {
    const char* name;
    int64_t ParamBreakdown::* member;
};

constexpr Field kBreakdownFields[] = {
    {"mhsa_weights", &ParamBreakdown::mhsa_weights},
    {"ffn_weights", &ParamBreakdown::ffn_weights},
    {"ln", &ParamBreakdown::ln},
    {"biases", &ParamBreakdown::biases},
    {"per_layer_total", &ParamBreakdown::per_layer_total},
    {"final_ln", &ParamBreakdown::final_ln},
    {"encoder_total", &ParamBreakdown::encoder_total},
    {"pos", &ParamBreakdown::pos},
    {"cls", &ParamBreakdown::cls},
    {"patch_proj", &ParamBreakdown::patch_proj},
    {"embeddings_tokens", &ParamBreakdown::embeddings_tokens},
    {"head", &ParamBreakdown::head},
    {"grand_total", &ParamBreakdown::grand_total},
};

std::string format_ratio(int64_t tcp, int64_t std_count) {
    if (std_count == 0) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f",
                  static_cast<double>(tcp) / static_cast<double>(std_count));
    return buf;
}

}  // namespace

std::string param_comparison_table(const ParamBreakdown& std_counts,
                                   const ParamBreakdown& tcp_counts) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-22s %14s %14s %8s\n", "Component", "Std-ViT",
                  "TCP-ViT", "Ratio");
    os << line;
    for (const Field& f : kBreakdownFields) {
        const int64_t sv = std_counts.*(f.member);
        const int64_t tv = tcp_counts.*(f.member);
        std::snprintf(line, sizeof(line), "%-22s %14lld %14lld %8s\n", f.name,
                      static_cast<long long>(sv), static_cast<long long>(tv),
                      format_ratio(tv, sv).c_str());
        os << line;
    }
    return os.str();
}

std::string breakdown_to_csv(const ParamBreakdown& b) {
    std::ostringstream os;
    os << "field,value\n";
    for (const Field& f : kBreakdownFields) {
        os << f.name << "," << b.*(f.member) << "\n";
    }
    return os.str();
}

ParamBreakdown breakdown_from_csv(const std::string& csv) {
    ParamBreakdown b;
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line) || line != "field,value") {
        throw std::invalid_argument("breakdown_from_csv: missing header");
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("breakdown_from_csv: malformed line " + line);
        }
        const std::string key = line.substr(0, comma);
        const int64_t value = std::stoll(line.substr(comma + 1));
        bool found = false;
        for (const Field& f : kBreakdownFields) {
            if (key == f.name) {
                b.*(f.member) = value;
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::invalid_argument("breakdown_from_csv: unknown field " + key);
        }
    }
    return b;
}

std::string breakdown_to_json(const ParamBreakdown& b) {
    nlohmann::ordered_json j;
    for (const Field& f : kBreakdownFields) {
        j[f.name] = b.*(f.member);
    }
    return j.dump(2);
}

std::string flops_to_table(const FlopsReport& r) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %18s %8s\n", "Quantity", "Value", "Ratio");
    os << line;
    std::snprintf(line, sizeof(line), "%-20s %18.0f %8s\n", "std_flops", r.std_flops, "");
    os << line;
    std::snprintf(line, sizeof(line), "%-20s %18.0f %8.5f\n", "tcp_flops", r.tcp_flops,
                  r.ratio);
    os << line;
    std::snprintf(line, sizeof(line), "%-20s %18.3f\n", "alpha", r.alpha);
    os << line;
    std::snprintf(line, sizeof(line), "%-20s %18.0f\n", "transform_overhead",
                  r.transform_overhead);
    os << line;
    return os.str();
}

std::string flops_to_csv(const FlopsReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "field,value\n"
       << "tcp_flops," << r.tcp_flops << "\n"
       << "std_flops," << r.std_flops << "\n"
       << "alpha," << r.alpha << "\n"
       << "ratio," << r.ratio << "\n"
       << "transform_overhead," << r.transform_overhead << "\n";
    return os.str();
}

std::string flops_to_json(const FlopsReport& r) {
    nlohmann::ordered_json j;
    j["tcp_flops"] = r.tcp_flops;
    j["std_flops"] = r.std_flops;
    j["alpha"] = r.alpha;
    j["ratio"] = r.ratio;
    j["transform_overhead"] = r.transform_overhead;
    return j.dump(2);
}

}  // namespace tcpvit
