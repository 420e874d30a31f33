#pragma once

#include <cstdint>
#include <string>

#include "tcpvit/model.hpp"
#include "tcpvit/train.hpp"

namespace tcpvit {

enum class DatasetKind { Synthetic, Cifar10 };

/// Everything a run needs: the architecture plus training hyperparameters and
/// data selection. Serialized as a flat JSON object with these exact key
/// names; unknown keys are errors.
struct RunConfig {
    ModelConfig model;
    double lr = 0.01;
    double weight_decay = 0.01;
    int64_t epochs = 30;
    int64_t batch_size = 32;
    double clip_norm = 1.0;
    Schedule schedule = Schedule::Cosine;
    DatasetKind dataset = DatasetKind::Synthetic;
    std::string dataset_path;
    int64_t train_limit = 200;
    int64_t test_limit = 100;
    uint64_t seed = 0;
    bool deterministic = true;

    void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::string& path);

// Named presets:
//   cls-paper  - 32x32x3 images, P=4, H=4, L=4, r_ff=4, 10 classes
//   seg-paper  - 128x128x3 images, P=8, H=4, L=4, r_ff=2
//   synthetic  - cls-paper architecture on the synthetic task (200/100 split)
RunConfig preset(const std::string& name);

}  // namespace tcpvit
