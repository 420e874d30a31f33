#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcpvit/data.hpp"
#include "tcpvit/grad.hpp"
#include "tcpvit/model.hpp"

namespace tcpvit {

enum class Schedule { Cosine, Constant };

struct TrainOptions {
    int64_t epochs = 30;
    int64_t batch_size = 32;
    double lr = 0.01;
    double weight_decay = 0.01;
    double clip_norm = 1.0;
    Schedule schedule = Schedule::Cosine;
    uint64_t seed = 0;
    bool augment = false;
};

struct MetricsRow {
    int64_t epoch;
    std::string split;  // "train" or "eval"
    double loss;
    double accuracy;
    double lr;
};

struct TrainResult {
    EncoderParams params;
    std::vector<MetricsRow> metrics;
};

// Mini-batch AdamW loop with deterministic shuffling, cosine annealing over
// all optimizer steps and global-norm gradient clipping. Per-sample gradients
// are summed in a fixed order, so the run is reproducible from the seed.
TrainResult train(const ModelConfig& config, const Dataset& train_set,
                  const Dataset& test_set, const TrainOptions& opts);

// Mean loss and accuracy of `params` on a dataset.
std::pair<double, double> evaluate(const EncoderParams& params,
                                   const ModelConfig& config, const DctPlan& plan,
                                   const Dataset& data);

// CSV with header epoch,split,loss,accuracy,lr.
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

}  // namespace tcpvit
