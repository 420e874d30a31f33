// tcpvit command line: invariant self-check, gradient check, parameter and
// FLOPs reports, desk-scale training and evaluation.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tcpvit/analysis.hpp"
#include "tcpvit/checkpoint.hpp"
#include "tcpvit/data.hpp"
#include "tcpvit/grad.hpp"
#include "tcpvit/kernels.hpp"
#include "tcpvit/model.hpp"
#include "tcpvit/runconfig.hpp"
#include "tcpvit/selfcheck.hpp"
#include "tcpvit/train.hpp"

namespace {

using namespace tcpvit;

struct CommonOpts {
    std::string config_path;
    std::string preset_name;
    std::optional<uint64_t> seed;
    bool deterministic = false;
    std::string dataset;
    std::string data_dir;
    std::optional<int64_t> limit;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--preset", o.preset_name,
                    "named preset (cls-paper, seg-paper, synthetic)");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_flag("--deterministic", o.deterministic,
                  "force deterministic execution");
    cmd->add_option("--dataset", o.dataset, "dataset (synthetic or cifar10)");
    cmd->add_option("--data-dir", o.data_dir, "dataset directory");
    cmd->add_option("--limit", o.limit, "sample limit for both splits");
}

RunConfig resolve_config(const CommonOpts& o, const std::string& default_preset) {
    RunConfig c;
    if (!o.config_path.empty()) {
        c = load_run_config(o.config_path);
    } else {
        c = preset(o.preset_name.empty() ? default_preset : o.preset_name);
    }
    if (o.seed) {
        c.seed = *o.seed;
        c.model.seed = *o.seed;
    }
    if (o.deterministic) c.deterministic = true;
    if (!o.dataset.empty()) {
        c.dataset = o.dataset == "cifar10" ? DatasetKind::Cifar10
                                           : DatasetKind::Synthetic;
        if (o.dataset != "cifar10" && o.dataset != "synthetic") {
            throw std::invalid_argument("unknown dataset '" + o.dataset + "'");
        }
    }
    if (!o.data_dir.empty()) c.dataset_path = o.data_dir;
    if (c.dataset_path.empty()) {
        if (const char* env = std::getenv("TCPVIT_DATA_DIR")) c.dataset_path = env;
    }
    if (o.limit) {
        c.train_limit = *o.limit;
        c.test_limit = *o.limit;
    }
    return c;
}

std::pair<Dataset, Dataset> load_datasets(const RunConfig& c) {
    if (c.dataset == DatasetKind::Cifar10) {
        if (c.dataset_path.empty()) {
            throw std::runtime_error(
                "cifar10 dataset requires --data-dir or TCPVIT_DATA_DIR");
        }
        return {load_cifar10_dir(c.dataset_path, true, c.train_limit),
                load_cifar10_dir(c.dataset_path, false, c.test_limit)};
    }
    const int64_t per_class_train =
        std::max<int64_t>(1, c.train_limit / c.model.num_classes);
    const int64_t per_class_test =
        std::max<int64_t>(1, c.test_limit / c.model.num_classes);
    return {make_synthetic(c.model.num_classes, per_class_train, c.model.img_h,
                           c.model.img_w, c.model.channels, c.seed, 0),
            make_synthetic(c.model.num_classes, per_class_test, c.model.img_h,
                           c.model.img_w, c.model.channels, c.seed, 1)};
}

int cmd_selfcheck() {
    const std::vector<CheckResult> results = run_selfcheck();
    bool ok = true;
    for (const CheckResult& r : results) {
        std::printf("%-24s %s  (residual %.3e, bound %.0e)\n", r.name.c_str(),
                    r.pass ? "ok" : "FAIL", r.value, r.bound);
        ok = ok && r.pass;
    }
    std::printf("selfcheck: %s\n", ok ? "all checks passed" : "FAILURES");
    return ok ? 0 : 1;
}

// Central-difference gradient check over every parameter group.
int cmd_gradcheck(const RunConfig& rc, int64_t num_seeds) {
    constexpr double kStep = 1e-5;
    constexpr double kBound = 1e-6;
    ModelConfig config = rc.model;
    const DctPlan plan = model_plan(config);
    bool ok = true;
    for (int64_t trial = 0; trial < num_seeds; ++trial) {
        const uint64_t seed = rc.seed + trial;
        EncoderParams params = init_params(config, seed);
        Rng rng(seed ^ 0x5eedULL);
        Tensor3 image(config.img_h, config.img_w, config.channels);
        for (double& v : image.data) v = rng.normal();
        const int64_t label =
            static_cast<int64_t>(rng.next_u64() % config.num_classes);

        GradTape tape;
        const auto logits = encoder_forward(image, params, config, plan, &tape);
        const LossResult ce = cross_entropy(logits, label);
        const EncoderParams grads =
            encoder_backward(ce.dlogits, tape, params, config, plan);

        auto ptensors = collect_params(params);
        auto gtensors = collect_params(const_cast<EncoderParams&>(grads));
        std::printf("gradcheck seed %llu\n", static_cast<unsigned long long>(seed));
        for (size_t t = 0; t < ptensors.size(); ++t) {
            double worst = 0.0;
            Tensor3& tensor = *ptensors[t].second;
            for (size_t i = 0; i < tensor.data.size(); ++i) {
                const double saved = tensor.data[i];
                tensor.data[i] = saved + kStep;
                const double up =
                    cross_entropy(encoder_forward(image, params, config, plan), label)
                        .loss;
                tensor.data[i] = saved - kStep;
                const double down =
                    cross_entropy(encoder_forward(image, params, config, plan), label)
                        .loss;
                tensor.data[i] = saved;
                const double numeric = (up - down) / (2.0 * kStep);
                const double analytic = gtensors[t].second->data[i];
                const double denom =
                    std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
                worst = std::max(worst, std::fabs(numeric - analytic) / denom);
            }
            const bool pass = worst <= kBound;
            ok = ok && pass;
            std::printf("  %-20s max rel err %.3e %s\n", ptensors[t].first.c_str(),
                        worst, pass ? "" : "FAIL");
        }
    }
    std::printf("gradcheck: %s\n", ok ? "pass" : "FAIL");
    return ok ? 0 : 1;
}

int cmd_params(const RunConfig& rc, ReportFormat format) {
    ModelConfig std_cfg = rc.model;
    std_cfg.variant = Variant::Std;
    ModelConfig tcp_cfg = rc.model;
    tcp_cfg.variant = Variant::Tcp;
    const ParamBreakdown std_counts = count_params(std_cfg);
    const ParamBreakdown tcp_counts = count_params(tcp_cfg);
    switch (format) {
        case ReportFormat::Table:
            std::cout << param_comparison_table(std_counts, tcp_counts);
            break;
        case ReportFormat::Csv:
            std::cout << "# std\n" << breakdown_to_csv(std_counts) << "# tcp\n"
                      << breakdown_to_csv(tcp_counts);
            break;
        case ReportFormat::Json:
            std::cout << "{\n\"std\": " << breakdown_to_json(std_counts)
                      << ",\n\"tcp\": " << breakdown_to_json(tcp_counts) << "\n}\n";
            break;
    }
    return 0;
}

int cmd_flops(const RunConfig& rc, int64_t tokens, ReportFormat format) {
    const int64_t n = tokens > 0 ? tokens : rc.model.tokens() + 1;
    const FlopsReport rep = flops_model(rc.model, n);
    switch (format) {
        case ReportFormat::Table:
            std::cout << flops_to_table(rep);
            break;
        case ReportFormat::Csv:
            std::cout << flops_to_csv(rep);
            break;
        case ReportFormat::Json:
            std::cout << flops_to_json(rep) << "\n";
            break;
    }
    return 0;
}

int cmd_train(const RunConfig& rc, const std::string& out_path, bool augment) {
    rc.validate();
    const auto [train_set, test_set] = load_datasets(rc);
    TrainOptions opts;
    opts.epochs = rc.epochs;
    opts.batch_size = std::min<int64_t>(rc.batch_size,
                                        static_cast<int64_t>(train_set.size()));
    opts.lr = rc.lr;
    opts.weight_decay = rc.weight_decay;
    opts.clip_norm = rc.clip_norm;
    opts.schedule = rc.schedule;
    opts.seed = rc.seed;
    opts.augment = augment && !rc.deterministic;
    ModelConfig config = rc.model;
    config.seed = rc.seed;
    std::fprintf(stderr, "training %s variant on %zu/%zu samples (%s backend)\n",
                 variant_to_string(config.variant), train_set.size(),
                 test_set.size(), kernels::backend_name(kernels::active_backend()));
    const TrainResult result = train(config, train_set, test_set, opts);
    std::cout << metrics_to_csv(result.metrics);
    if (!out_path.empty()) {
        save_checkpoint(out_path, result.params);
        std::fprintf(stderr, "checkpoint written to %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& checkpoint_path) {
    rc.validate();
    ModelConfig config = rc.model;
    config.seed = rc.seed;
    EncoderParams params = init_params(config, rc.seed);
    load_checkpoint(checkpoint_path, params);
    const auto [train_set, test_set] = load_datasets(rc);
    const DctPlan plan = model_plan(config);
    const auto [loss, acc] = evaluate(params, config, plan, test_set);
    std::cout << "epoch,split,loss,accuracy,lr\n";
    std::printf("0,eval,%.9f,%.6f,0\n", loss, acc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensor cosine product vision transformer toolkit"};
    app.require_subcommand(1);

    std::string backend;
    app.add_option("--backend", backend, "kernel backend (auto, scalar, avx2)");

    CommonOpts sc_opts, gc_opts, p_opts, f_opts, tr_opts, ev_opts;

    CLI::App* sc = app.add_subcommand("selfcheck", "run the invariant suite");
    add_common(sc, sc_opts);

    CLI::App* gc = app.add_subcommand("gradcheck",
                                      "analytic vs finite-difference gradients");
    add_common(gc, gc_opts);
    int64_t gc_seeds = 1;
    gc->add_option("--seeds", gc_seeds, "number of seeds to check");

    std::string p_format = "table";
    CLI::App* pc = app.add_subcommand("params", "parameter count report");
    add_common(pc, p_opts);
    pc->add_option("--format", p_format, "table, csv or json");

    std::string f_format = "table";
    int64_t f_tokens = 0;
    CLI::App* fc = app.add_subcommand("flops", "FLOPs model report");
    add_common(fc, f_opts);
    fc->add_option("--format", f_format, "table, csv or json");
    fc->add_option("--tokens", f_tokens, "token count N (default: N+1 of the config)");

    std::string train_out;
    bool train_augment = false;
    CLI::App* tc = app.add_subcommand("train", "desk-scale training run");
    add_common(tc, tr_opts);
    tc->add_option("--out", train_out, "checkpoint output path");
    tc->add_flag("--augment", train_augment, "random flip + pad-4 crop");

    std::string eval_checkpoint;
    CLI::App* ec = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(ec, ev_opts);
    ec->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!backend.empty() && backend != "auto") {
            if (backend == "scalar") {
                kernels::set_backend(kernels::Backend::Scalar);
            } else if (backend == "avx2") {
                kernels::set_backend(kernels::Backend::Avx2);
            } else {
                throw std::invalid_argument("unknown backend '" + backend + "'");
            }
        }
        if (sc->parsed()) return cmd_selfcheck();
        if (gc->parsed()) {
            return cmd_gradcheck(resolve_config(gc_opts, "gradcheck"), gc_seeds);
        }
        if (pc->parsed()) {
            return cmd_params(resolve_config(p_opts, "cls-paper"),
                              report_format_from_string(p_format));
        }
        if (fc->parsed()) {
            return cmd_flops(resolve_config(f_opts, "cls-paper"), f_tokens,
                             report_format_from_string(f_format));
        }
        if (tc->parsed()) {
            return cmd_train(resolve_config(tr_opts, "synthetic"), train_out,
                             train_augment);
        }
        if (ec->parsed()) {
            return cmd_eval(resolve_config(ev_opts, "synthetic"), eval_checkpoint);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
