#include "tcpvit/data.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace tcpvit {

namespace {

constexpr int64_t kCifarDim = 32;
constexpr int64_t kCifarChannels = 3;
constexpr int64_t kCifarRecordBytes = 1 + kCifarDim * kCifarDim * kCifarChannels;

}  // namespace

Dataset load_cifar10(const std::string& path, int64_t limit,
                     const std::array<double, 3>& mean,
                     const std::array<double, 3>& stddev) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_cifar10: cannot open " + path);
    }
    in.seekg(0, std::ios::end);
    const int64_t bytes = static_cast<int64_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    if (bytes % kCifarRecordBytes != 0) {
        throw std::runtime_error("load_cifar10: " + path + " has " +
                                 std::to_string(bytes) +
                                 " bytes, not a multiple of 3073");
    }
    int64_t records = bytes / kCifarRecordBytes;
    if (limit >= 0) records = std::min(records, limit);
    Dataset out;
    out.reserve(records);
    std::vector<unsigned char> rec(kCifarRecordBytes);
    for (int64_t r = 0; r < records; ++r) {
        in.read(reinterpret_cast<char*>(rec.data()), kCifarRecordBytes);
        if (!in) {
            throw std::runtime_error("load_cifar10: short read in " + path);
        }
        if (rec[0] > 9) {
            throw std::runtime_error("load_cifar10: label byte " +
                                     std::to_string(rec[0]) + " out of range in " +
                                     path);
        }
        Sample s;
        s.label = rec[0];
        s.image = Tensor3(kCifarDim, kCifarDim, kCifarChannels);
        for (int64_t k = 0; k < kCifarChannels; ++k) {
            const unsigned char* plane = rec.data() + 1 + k * kCifarDim * kCifarDim;
            for (int64_t i = 0; i < kCifarDim; ++i) {
                for (int64_t j = 0; j < kCifarDim; ++j) {
                    const double v = plane[i * kCifarDim + j] / 255.0;
                    s.image(i, j, k) = (v - mean[k]) / stddev[k];
                }
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

Dataset load_cifar10_dir(const std::string& dir, bool train, int64_t limit,
                         const std::array<double, 3>& mean,
                         const std::array<double, 3>& stddev) {
    namespace fs = std::filesystem;
    Dataset out;
    if (train) {
        for (int b = 1; b <= 5 && (limit < 0 || (int64_t)out.size() < limit); ++b) {
            const std::string path =
                (fs::path(dir) / ("data_batch_" + std::to_string(b) + ".bin")).string();
            const int64_t remaining =
                limit < 0 ? -1 : limit - static_cast<int64_t>(out.size());
            Dataset part = load_cifar10(path, remaining, mean, stddev);
            for (Sample& s : part) out.push_back(std::move(s));
        }
    } else {
        out = load_cifar10((fs::path(dir) / "test_batch.bin").string(), limit, mean,
                           stddev);
    }
    return out;
}

std::vector<Tensor3> synthetic_templates(int64_t num_classes, int64_t img_h,
                                         int64_t img_w, int64_t channels,
                                         uint64_t seed) {
    const int64_t dim = img_h * img_w * channels;
    if (num_classes > dim) {
        throw std::invalid_argument(
            "synthetic_templates: more classes than pixels, cannot orthogonalize");
    }
    Rng rng(seed);
    std::vector<std::vector<double>> basis(num_classes, std::vector<double>(dim));
    for (auto& t : basis) {
        for (double& v : t) v = rng.normal();
    }
    // Gram-Schmidt, then scale every template to per-pixel RMS 0.25 so the
    // signal is comparable to the noise level.
    const double target_norm = 0.25 * std::sqrt(static_cast<double>(dim));
    for (int64_t c = 0; c < num_classes; ++c) {
        for (int64_t p = 0; p < c; ++p) {
            double dot = 0.0;
            for (int64_t i = 0; i < dim; ++i) dot += basis[c][i] * basis[p][i];
            for (int64_t i = 0; i < dim; ++i) basis[c][i] -= dot * basis[p][i];
        }
        double norm = 0.0;
        for (double v : basis[c]) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-9) {
            throw std::runtime_error("synthetic_templates: degenerate basis");
        }
        for (double& v : basis[c]) v /= norm;
    }
    std::vector<Tensor3> out;
    out.reserve(num_classes);
    for (int64_t c = 0; c < num_classes; ++c) {
        std::vector<double> scaled(dim);
        for (int64_t i = 0; i < dim; ++i) scaled[i] = target_norm * basis[c][i];
        out.emplace_back(img_h, img_w, channels, std::move(scaled));
    }
    return out;
}

Dataset make_synthetic(int64_t num_classes, int64_t samples_per_class, int64_t img_h,
                       int64_t img_w, int64_t channels, uint64_t seed,
                       uint64_t noise_stream) {
    const std::vector<Tensor3> templates =
        synthetic_templates(num_classes, img_h, img_w, channels, seed);
    // Separate stream so that different splits of the same task (same seed)
    // share templates but draw independent noise.
    Rng noise(seed * 0x9e3779b97f4a7c15ULL + noise_stream + 1);
    Dataset out;
    out.reserve(num_classes * samples_per_class);
    for (int64_t c = 0; c < num_classes; ++c) {
        for (int64_t s = 0; s < samples_per_class; ++s) {
            Sample sample;
            sample.label = c;
            sample.image = templates[c];
            for (double& v : sample.image.data) v += 0.25 * noise.normal();
            out.push_back(std::move(sample));
        }
    }
    return out;
}

Tensor3 augment_image(const Tensor3& image, Rng& rng) {
    constexpr int64_t pad = 4;
    Tensor3 out = image;
    if (rng.uniform() < 0.5) {
        for (int64_t i = 0; i < image.rows; ++i) {
            for (int64_t j = 0; j < image.cols; ++j) {
                for (int64_t k = 0; k < image.channels; ++k) {
                    out(i, j, k) = image(i, image.cols - 1 - j, k);
                }
            }
        }
    }
    const int64_t dy = rng.uniform_int(-pad, pad);
    const int64_t dx = rng.uniform_int(-pad, pad);
    Tensor3 shifted(image.rows, image.cols, image.channels);
    for (int64_t i = 0; i < image.rows; ++i) {
        const int64_t si = i + dy;
        if (si < 0 || si >= image.rows) continue;
        for (int64_t j = 0; j < image.cols; ++j) {
            const int64_t sj = j + dx;
            if (sj < 0 || sj >= image.cols) continue;
            for (int64_t k = 0; k < image.channels; ++k) {
                shifted(i, j, k) = out(si, sj, k);
            }
        }
    }
    return shifted;
}

}  // namespace tcpvit
