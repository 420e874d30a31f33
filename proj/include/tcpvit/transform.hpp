#pragma once

#include <cstdint>
#include <vector>

#include "tcpvit/tensor.hpp"

namespace tcpvit {

/// Precomputed orthogonal DCT-II matrix of size C x C and its transpose.
/// Row index j is the frequency, column index k the position.
struct DctPlan {
    int64_t size = 0;
    std::vector<double> forward;  // C x C row-major
    std::vector<double> inverse;  // forward transposed

    double fwd(int64_t j, int64_t k) const { return forward[j * size + k]; }
};

// Entries: sqrt(1/C) for j = 0, sqrt(2/C) * cos(pi * (2k+1) * j / (2C)) for
// j >= 1. Throws std::invalid_argument for C = 0.
DctPlan build_dct_plan(int64_t c);

// DCT along the third mode: every tube (i, j, :) is multiplied by the forward
// matrix. Requires plan.size == x.channels.
Tensor3 dct3(const Tensor3& x, const DctPlan& plan);

// Inverse transform; idct3(dct3(x)) == x up to roundoff.
Tensor3 idct3(const Tensor3& xhat, const DctPlan& plan);

}  // namespace tcpvit
