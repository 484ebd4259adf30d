#pragma once

#include <span>

#include "caattack/matrix.hpp"

// Dense and sparse products used by the models and the adjacency gradient.
//
// The top-level functions are OpenMP-parallel over output rows. Every output
// entry is reduced by a single thread in a fixed order, so results are
// bitwise identical for any thread count. The `reference` namespace holds
// plain serial loops with the same contracts; tests and the benchmark
// compare the two.
namespace caatk::kernels {

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// s * b, s sparse
Matrix spmm(const CsrMatrix& s, const Matrix& b);
// a1 * b1ᵀ + a2 * b2ᵀ; all operands share the inner dimension
Matrix outer_sum_nt(const Matrix& a1, const Matrix& b1, const Matrix& a2, const Matrix& b2);
// Pulls dL/dÂ back through Â = D^{-1/2} (A + I) D^{-1/2} to dL/dA, treating
// every entry of A (and the row sums in D) as independent. `ahat` must hold
// the sparsity pattern of A + I; `degree` the row sums of A + I.
Matrix normalization_backward(const Matrix& gbar, const CsrMatrix& ahat,
                              std::span<const double> degree);
// (m + mᵀ) / 2 with the diagonal zeroed.
Matrix symmetrize_zero_diagonal(const Matrix& m);

namespace reference {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix spmm(const CsrMatrix& s, const Matrix& b);
Matrix outer_sum_nt(const Matrix& a1, const Matrix& b1, const Matrix& a2, const Matrix& b2);
Matrix normalization_backward(const Matrix& gbar, const CsrMatrix& ahat,
                              std::span<const double> degree);
Matrix symmetrize_zero_diagonal(const Matrix& m);
}  // namespace reference

// Number of threads OpenMP will use for the parallel kernels.
int max_threads();

}  // namespace caatk::kernels
