#include "tcpvit/train.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "tcpvit/kernels.hpp"

namespace tcpvit {

namespace {

void accumulate_grads(EncoderParams& total, EncoderParams& delta) {
    auto t = collect_params(total);
    auto d = collect_params(delta);
    for (size_t i = 0; i < t.size(); ++i) {
        kernels::add(t[i].second->data.data(), d[i].second->data.data(),
                     t[i].second->data.data(), t[i].second->data.size());
    }
}

void scale_grads(EncoderParams& grads, double f) {
    for_each_param(grads, [&](const std::string&, Tensor3& t) {
        kernels::scale(f, t.data.data(), t.data.data(), t.data.size());
    });
}

}  // namespace

std::pair<double, double> evaluate(const EncoderParams& params,
                                   const ModelConfig& config, const DctPlan& plan,
                                   const Dataset& data) {
    if (data.empty()) return {0.0, 0.0};
    double loss_sum = 0.0;
    int64_t correct = 0;
    for (const Sample& s : data) {
        const std::vector<double> logits = encoder_forward(s.image, params, config, plan);
        loss_sum += cross_entropy(logits, s.label).loss;
        const int64_t pred =
            std::max_element(logits.begin(), logits.end()) - logits.begin();
        if (pred == s.label) ++correct;
    }
    const double n = static_cast<double>(data.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

TrainResult train(const ModelConfig& config, const Dataset& train_set,
                  const Dataset& test_set, const TrainOptions& opts) {
    config.validate();
    if (train_set.empty()) {
        throw std::invalid_argument("train: empty training set");
    }
    if (opts.batch_size < 1 ||
        opts.batch_size > static_cast<int64_t>(train_set.size())) {
        throw std::invalid_argument("train: batch size must be in [1, dataset size]");
    }

    const DctPlan plan = model_plan(config);
    TrainResult result;
    result.params = init_params(config, config.seed);
    OptimState state = make_optim_state(result.params);
    Rng rng(opts.seed);

    const int64_t n = static_cast<int64_t>(train_set.size());
    const int64_t steps_per_epoch = (n + opts.batch_size - 1) / opts.batch_size;
    const int64_t total_steps = steps_per_epoch * opts.epochs;
    int64_t step = 0;
    double lr = opts.lr;

    std::vector<int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int64_t epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        int64_t correct = 0;
        for (int64_t start = 0; start < n; start += opts.batch_size) {
            const int64_t end = std::min(start + opts.batch_size, n);
            EncoderParams grads = zeros_like(result.params);
            for (int64_t s = start; s < end; ++s) {
                const Sample& sample = train_set[order[s]];
                const Tensor3 image =
                    opts.augment ? augment_image(sample.image, rng) : sample.image;
                GradTape tape;
                const std::vector<double> logits =
                    encoder_forward(image, result.params, config, plan, &tape);
                const LossResult ce = cross_entropy(logits, sample.label);
                loss_sum += ce.loss;
                const int64_t pred =
                    std::max_element(logits.begin(), logits.end()) - logits.begin();
                if (pred == sample.label) ++correct;
                EncoderParams sample_grads =
                    encoder_backward(ce.dlogits, tape, result.params, config, plan);
                accumulate_grads(grads, sample_grads);
            }
            scale_grads(grads, 1.0 / static_cast<double>(end - start));
            clip_gradients(grads, opts.clip_norm);
            lr = opts.schedule == Schedule::Cosine
                     ? cosine_schedule(step, total_steps, opts.lr)
                     : opts.lr;
            adamw_step(result.params, grads, state, lr, opts.weight_decay);
            ++step;
        }
        result.metrics.push_back({epoch, "train",
                                  loss_sum / static_cast<double>(n),
                                  static_cast<double>(correct) / static_cast<double>(n),
                                  lr});
        if (!test_set.empty()) {
            const auto [eval_loss, eval_acc] =
                evaluate(result.params, config, plan, test_set);
            result.metrics.push_back({epoch, "eval", eval_loss, eval_acc, lr});
        }
    }
    return result;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "epoch,split,loss,accuracy,lr\n";
    char buf[160];
    for (const MetricsRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%s,%.9f,%.6f,%.9g\n",
                      static_cast<long long>(r.epoch), r.split.c_str(), r.loss,
                      r.accuracy, r.lr);
        out += buf;
    }
    return out;
}

}  // namespace tcpvit
