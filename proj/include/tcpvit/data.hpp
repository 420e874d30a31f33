#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tcpvit/rng.hpp"
#include "tcpvit/tensor.hpp"

namespace tcpvit {

struct Sample {
    Tensor3 image;  // img_h x img_w x channels
    int64_t label = 0;
};

using Dataset = std::vector<Sample>;

// Default normalization statistics for the CIFAR-10 training set.
inline constexpr std::array<double, 3> kCifarMean = {0.4914, 0.4822, 0.4465};
inline constexpr std::array<double, 3> kCifarStd = {0.2470, 0.2435, 0.2616};

// Reads one CIFAR-10 binary batch file: records of 3073 bytes, a label byte in
// [0, 9] followed by three 1024-byte channel planes (R, G, B), each a
// row-major 32x32 image. Pixels are scaled to [0, 1] and normalized per
// channel. Throws on wrong file size or an out-of-range label.
Dataset load_cifar10(const std::string& path, int64_t limit,
                     const std::array<double, 3>& mean = kCifarMean,
                     const std::array<double, 3>& stddev = kCifarStd);

// Directory layout of the standard binary distribution: data_batch_1..5.bin
// for training, test_batch.bin for evaluation.
Dataset load_cifar10_dir(const std::string& dir, bool train, int64_t limit,
                         const std::array<double, 3>& mean = kCifarMean,
                         const std::array<double, 3>& stddev = kCifarStd);

// Synthetic linearly separable task: each class has a fixed random template
// (templates mutually orthogonalized, per-pixel RMS 0.25) and samples are
// template + Gaussian noise with sigma 0.25. Templates depend only on
// (num_classes, shape, seed); `noise_stream` selects an independent noise
// sequence so train and test splits share templates.
Dataset make_synthetic(int64_t num_classes, int64_t samples_per_class, int64_t img_h,
                       int64_t img_w, int64_t channels, uint64_t seed,
                       uint64_t noise_stream = 0);

// The class templates themselves (used by the nearest-template oracle tests).
std::vector<Tensor3> synthetic_templates(int64_t num_classes, int64_t img_h,
                                         int64_t img_w, int64_t channels,
                                         uint64_t seed);

// Training-time augmentation: horizontal flip with probability 1/2, then a
// random crop from the zero-padded (pad 4) image.
Tensor3 augment_image(const Tensor3& image, Rng& rng);

}  // namespace tcpvit
