#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "tcpvit/tensor.hpp"
#include "tcpvit/transform.hpp"

namespace tcpvit {

struct singular_slice_error : std::runtime_error {
    int64_t slice;
    explicit singular_slice_error(int64_t k)
        : std::runtime_error("cinv: DCT-domain slice " + std::to_string(k) +
                             " is singular"),
          slice(k) {}
};

// Tensor cosine product: idct3 of the slice-wise products of the operands'
// DCT transforms. A is m x n x C, B is n x l x C, result m x l x C.
Tensor3 cprod(const Tensor3& a, const Tensor3& b, const DctPlan& plan);

// The slice-wise multiply kernel of the c-product, without any transforms.
// Both operands and the result live in the DCT domain.
Tensor3 cprod_hat(const Tensor3& ahat, const Tensor3& bhat);

// Tensor whose DCT-domain slices are the transposes of a's DCT-domain slices.
// Slice transposition commutes with the mode-3 transform, so this is also the
// per-slice transpose in the spatial domain.
Tensor3 ctranspose(const Tensor3& a, const DctPlan& plan);

// Neutral element of the c-product: every DCT-domain slice equals I_m.
Tensor3 identity_tensor(int64_t m, int64_t c, const DctPlan& plan);

// c-product inverse via LU with partial pivoting on each DCT-domain slice.
// Throws singular_slice_error naming the offending slice.
Tensor3 cinv(const Tensor3& a, const DctPlan& plan);

// Structure predicates, evaluated on every DCT-domain frontal slice.
bool is_f_diagonal(const Tensor3& a, const DctPlan& plan, double tol = 1e-10);
bool is_f_symmetric(const Tensor3& a, const DctPlan& plan, double tol = 1e-10);
bool is_f_orthogonal(const Tensor3& a, const DctPlan& plan, double tol = 1e-10);
// Symmetry check (default tolerance) followed by a Cholesky attempt per slice.
bool is_f_positive_definite(const Tensor3& a, const DctPlan& plan);

}  // namespace tcpvit
