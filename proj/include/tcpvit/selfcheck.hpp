#pragma once

#include <string>
#include <vector>

namespace tcpvit {

struct CheckResult {
    std::string name;
    bool pass;
    double value;  // the residual or error the check measured
    double bound;
};

// Runs the library's invariant suite: transform orthogonality and round trips,
// c-product algebra laws, softmax normalization and the C=1 equivalence with
// plain matrix arithmetic. Deterministic; safe to run in production builds.
std::vector<CheckResult> run_selfcheck();

}  // namespace tcpvit
