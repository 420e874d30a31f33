#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tcpvit {

/// Deterministic random stream. Gaussian draws use Box-Muller on raw
/// mt19937_64 output instead of std::normal_distribution, whose sequence is
/// implementation-defined; with this the same seed gives the same values on
/// every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive bounds
        const uint64_t span = static_cast<uint64_t>(hi - lo + 1);
        return lo + static_cast<int64_t>(gen_() % span);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Normal(0, stddev) redrawn until within two standard deviations.
    double trunc_normal(double stddev) {
        double v = normal();
        while (std::fabs(v) > 2.0) v = normal();
        return stddev * v;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(gen_() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tcpvit
