#include "tcpvit/selfcheck.hpp"

#include <cmath>
#include <cstdlib>

#include "tcpvit/ctensor.hpp"
#include "tcpvit/layers.hpp"
#include "tcpvit/rng.hpp"
#include "tcpvit/tensor.hpp"
#include "tcpvit/transform.hpp"

namespace tcpvit {

namespace {

Tensor3 random_tensor(int64_t m, int64_t n, int64_t c, Rng& rng) {
    Tensor3 t(m, n, c);
    for (double& v : t.data) v = rng.normal();
    return t;
}

// Hidden test hook: TCPVIT_SELFCHECK_FAULT perturbs the plan this suite uses,
// which must make the orthogonality check fail.
DctPlan checked_plan(int64_t c) {
    DctPlan plan = build_dct_plan(c);
    if (std::getenv("TCPVIT_SELFCHECK_FAULT") != nullptr) {
        plan.forward[0] += 1e-3;
    }
    return plan;
}

double orthogonality_residual(const DctPlan& plan) {
    const int64_t c = plan.size;
    double worst = 0.0;
    for (int64_t i = 0; i < c; ++i) {
        for (int64_t j = 0; j < c; ++j) {
            double dot = 0.0;
            for (int64_t l = 0; l < c; ++l) {
                dot += plan.forward[l * c + i] * plan.forward[l * c + j];
            }
            worst = std::max(worst, std::fabs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

double rel_diff(const Tensor3& a, const Tensor3& b) {
    return max_abs_diff(a, b) / (1.0 + std::max(max_abs(a), max_abs(b)));
}

// Plain row-major matrix product used by the C=1 equivalence check.
std::vector<double> matmul_ref(const std::vector<double>& a,
                               const std::vector<double>& b, int64_t m, int64_t k,
                               int64_t n) {
    std::vector<double> c(m * n, 0.0);
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (int64_t l = 0; l < k; ++l) s += a[i * k + l] * b[l * n + j];
            c[i * n + j] = s;
        }
    }
    return c;
}

}  // namespace

std::vector<CheckResult> run_selfcheck() {
    std::vector<CheckResult> results;
    Rng rng(20240901);
    const auto record = [&](const std::string& name, double value, double bound) {
        results.push_back({name, value <= bound, value, bound});
    };

    // DCT-II orthogonality across the plan sizes that matter.
    {
        double worst = 0.0;
        for (int64_t c = 1; c <= 64; ++c) {
            worst = std::max(worst, orthogonality_residual(checked_plan(c)));
        }
        record("dct-orthogonality", worst, 1e-12);
    }

    const DctPlan plan3 = checked_plan(3);

    {
        const Tensor3 x = random_tensor(4, 5, 3, rng);
        record("dct-roundtrip", rel_diff(idct3(dct3(x, plan3), plan3), x), 1e-12);
        const double nx = frobenius_norm(x);
        record("dct-parseval", std::fabs(frobenius_norm(dct3(x, plan3)) - nx) / nx,
               1e-10);
    }

    {
        const Tensor3 a = random_tensor(2, 3, 3, rng);
        const Tensor3 b = random_tensor(3, 4, 3, rng);
        const Tensor3 c = random_tensor(4, 2, 3, rng);
        const Tensor3 left = cprod(cprod(a, b, plan3), c, plan3);
        const Tensor3 right = cprod(a, cprod(b, c, plan3), plan3);
        record("cprod-associativity", rel_diff(left, right), 1e-10);

        const Tensor3 b2 = random_tensor(3, 4, 3, rng);
        const Tensor3 lhs = cprod(a, add(b, b2), plan3);
        const Tensor3 rhs = add(cprod(a, b, plan3), cprod(a, b2, plan3));
        record("cprod-distributivity", rel_diff(lhs, rhs), 1e-11);

        const Tensor3 e = identity_tensor(3, 3, plan3);
        record("identity-law", rel_diff(cprod(e, b, plan3), b), 1e-12);

        const Tensor3 rev_l = ctranspose(cprod(a, b, plan3), plan3);
        const Tensor3 rev_r =
            cprod(ctranspose(b, plan3), ctranspose(a, plan3), plan3);
        record("reversal-law", rel_diff(rev_l, rev_r), 1e-11);

        Tensor3 sq = random_tensor(3, 3, 3, rng);
        for (int64_t i = 0; i < 3; ++i) {
            for (int64_t k = 0; k < 3; ++k) sq(i, i, k) += 4.0;  // well conditioned
        }
        const Tensor3 resid =
            sub(cprod(sq, cinv(sq, plan3), plan3), identity_tensor(3, 3, plan3));
        record("cinv-residual", max_abs(resid), 1e-9);
    }

    {
        const Tensor3 s = random_tensor(5, 5, 3, rng);
        const Tensor3 prob_hat = dct3(t_softmax(s, plan3), plan3);
        double worst = 0.0;
        for (int64_t k = 0; k < 3; ++k) {
            for (int64_t i = 0; i < 5; ++i) {
                double sum = 0.0;
                for (int64_t j = 0; j < 5; ++j) sum += prob_hat(i, j, k);
                worst = std::max(worst, std::fabs(sum - 1.0));
            }
        }
        record("softmax-rowsum", worst, 1e-12);
    }

    // C=1: the c-product collapses to plain matrix arithmetic.
    {
        const DctPlan plan1 = checked_plan(1);
        const Tensor3 a = random_tensor(4, 3, 1, rng);
        const Tensor3 b = random_tensor(3, 5, 1, rng);
        const Tensor3 prod = cprod(a, b, plan1);
        const std::vector<double> ref = matmul_ref(a.data, b.data, 4, 3, 5);
        double worst = 0.0;
        for (size_t i = 0; i < ref.size(); ++i) {
            worst = std::max(worst, std::fabs(prod.data[i] - ref[i]));
        }
        record("c1-equivalence", worst, 1e-12);
    }

    return results;
}

}  // namespace tcpvit
