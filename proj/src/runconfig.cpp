#include "tcpvit/runconfig.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tcpvit {

namespace {

using nlohmann::ordered_json;

const char* schedule_to_string(Schedule s) {
    return s == Schedule::Cosine ? "cosine" : "constant";
}

Schedule schedule_from_string(const std::string& s) {
    if (s == "cosine") return Schedule::Cosine;
    if (s == "constant") return Schedule::Constant;
    throw std::invalid_argument("unknown schedule '" + s +
                                "' (expected cosine or constant)");
}

const char* dataset_to_string(DatasetKind d) {
    return d == DatasetKind::Synthetic ? "synthetic" : "cifar10";
}

DatasetKind dataset_from_string(const std::string& s) {
    if (s == "synthetic") return DatasetKind::Synthetic;
    if (s == "cifar10") return DatasetKind::Cifar10;
    throw std::invalid_argument("unknown dataset '" + s +
                                "' (expected synthetic or cifar10)");
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    if (lr <= 0.0 || weight_decay < 0.0 || clip_norm <= 0.0) {
        throw std::invalid_argument("RunConfig: lr/clip_norm must be positive");
    }
    if (epochs < 1 || batch_size < 1 || train_limit < 1 || test_limit < 0) {
        throw std::invalid_argument("RunConfig: counts must be positive");
    }
}

RunConfig parse_run_config(const std::string& json_text) {
    ordered_json j = ordered_json::parse(json_text);
    if (!j.is_object()) {
        throw std::invalid_argument("config: top level must be a JSON object");
    }
    RunConfig c;
    for (auto& [key, value] : j.items()) {
        if (key == "img_h") c.model.img_h = value.get<int64_t>();
        else if (key == "img_w") c.model.img_w = value.get<int64_t>();
        else if (key == "channels") c.model.channels = value.get<int64_t>();
        else if (key == "patch") c.model.patch = value.get<int64_t>();
        else if (key == "heads") c.model.heads = value.get<int64_t>();
        else if (key == "layers") c.model.layers = value.get<int64_t>();
        else if (key == "r_ff") c.model.r_ff = value.get<int64_t>();
        else if (key == "num_classes") c.model.num_classes = value.get<int64_t>();
        else if (key == "variant") c.model.variant = variant_from_string(value.get<std::string>());
        else if (key == "seed") { c.seed = value.get<uint64_t>(); c.model.seed = c.seed; }
        else if (key == "lr") c.lr = value.get<double>();
        else if (key == "weight_decay") c.weight_decay = value.get<double>();
        else if (key == "epochs") c.epochs = value.get<int64_t>();
        else if (key == "batch_size") c.batch_size = value.get<int64_t>();
        else if (key == "clip_norm") c.clip_norm = value.get<double>();
        else if (key == "schedule") c.schedule = schedule_from_string(value.get<std::string>());
        else if (key == "dataset") c.dataset = dataset_from_string(value.get<std::string>());
        else if (key == "dataset_path") c.dataset_path = value.get<std::string>();
        else if (key == "train_limit") c.train_limit = value.get<int64_t>();
        else if (key == "test_limit") c.test_limit = value.get<int64_t>();
        else if (key == "deterministic") c.deterministic = value.get<bool>();
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return c;
}

std::string run_config_to_json(const RunConfig& c) {
    ordered_json j;
    j["img_h"] = c.model.img_h;
    j["img_w"] = c.model.img_w;
    j["channels"] = c.model.channels;
    j["patch"] = c.model.patch;
    j["heads"] = c.model.heads;
    j["layers"] = c.model.layers;
    j["r_ff"] = c.model.r_ff;
    j["num_classes"] = c.model.num_classes;
    j["variant"] = variant_to_string(c.model.variant);
    j["seed"] = c.seed;
    j["lr"] = c.lr;
    j["weight_decay"] = c.weight_decay;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["clip_norm"] = c.clip_norm;
    j["schedule"] = schedule_to_string(c.schedule);
    j["dataset"] = dataset_to_string(c.dataset);
    j["dataset_path"] = c.dataset_path;
    j["train_limit"] = c.train_limit;
    j["test_limit"] = c.test_limit;
    j["deterministic"] = c.deterministic;
    return j.dump(2);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

RunConfig preset(const std::string& name) {
    RunConfig c;
    if (name == "cls-paper") {
        c.model = ModelConfig{32, 32, 3, 4, 4, 4, 4, 10, Variant::Tcp, 0};
    } else if (name == "seg-paper") {
        c.model = ModelConfig{128, 128, 3, 8, 4, 4, 2, 2, Variant::Tcp, 0};
    } else if (name == "synthetic") {
        c.model = ModelConfig{32, 32, 3, 4, 4, 4, 4, 10, Variant::Tcp, 0};
        c.dataset = DatasetKind::Synthetic;
        c.train_limit = 200;
        c.test_limit = 100;
        c.epochs = 30;
        c.batch_size = 32;
        c.lr = 0.01;
        c.weight_decay = 0.01;
    } else if (name == "gradcheck") {
        c.model = ModelConfig{8, 8, 3, 4, 2, 1, 2, 3, Variant::Tcp, 0};
    } else {
        throw std::invalid_argument(
            "unknown preset '" + name +
            "' (expected cls-paper, seg-paper, synthetic or gradcheck)");
    }
    return c;
}

}  // namespace tcpvit
