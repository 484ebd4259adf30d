#include <gtest/gtest.h>

#include "caattack/graph.hpp"
#include "caattack/kernels.hpp"
#include "support.hpp"

namespace caatk {
namespace {

using testing::random_graph;
using testing::random_matrix;

// Sparse matrix with roughly `density` nonzeros.
CsrMatrix random_sparse(std::size_t rows, std::size_t cols, double density, std::uint64_t seed) {
  Matrix m = random_matrix(rows, cols, seed);
  Matrix keep = random_matrix(rows, cols, seed + 100, 0.0, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (keep.data()[i] > density) m.data()[i] = 0.0;
  return CsrMatrix::from_dense(m);
}

TEST(Kernels, MatmulFamilyMatchesReferenceExactly) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix a = random_matrix(37, 13, seed);
    const Matrix b = random_matrix(13, 9, seed + 10);
    const Matrix c = random_matrix(37, 9, seed + 20);
    const Matrix e = random_matrix(21, 13, seed + 30);
    EXPECT_EQ(kernels::matmul(a, b), kernels::reference::matmul(a, b));
    EXPECT_EQ(kernels::matmul_tn(a, c), kernels::reference::matmul_tn(a, c));
    EXPECT_EQ(kernels::matmul_nt(a, e), kernels::reference::matmul_nt(a, e));
  }
}

TEST(Kernels, ReferenceMatmulAgreesWithHandComputedProduct) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  EXPECT_EQ(kernels::reference::matmul(a, b), Matrix::from_rows({{19, 22}, {43, 50}}));
  EXPECT_EQ(kernels::reference::matmul_tn(a, b), Matrix::from_rows({{26, 30}, {38, 44}}));
  EXPECT_EQ(kernels::reference::matmul_nt(a, b), Matrix::from_rows({{17, 23}, {39, 53}}));
}

TEST(Kernels, SpmmMatchesDenseProduct) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CsrMatrix s = random_sparse(40, 30, 0.1, seed);
    const Matrix b = random_matrix(30, 6, seed + 1);
    EXPECT_EQ(kernels::spmm(s, b), kernels::reference::spmm(s, b));
    EXPECT_LT(max_abs_difference(kernels::spmm(s, b), kernels::reference::matmul(s.to_dense(), b)),
              1e-13);
  }
}

TEST(Kernels, OuterSumMatchesTwoProducts) {
  const Matrix a1 = random_matrix(25, 4, 1), b1 = random_matrix(25, 4, 2);
  const Matrix a2 = random_matrix(25, 4, 3), b2 = random_matrix(25, 4, 4);
  const Matrix got = kernels::outer_sum_nt(a1, b1, a2, b2);
  EXPECT_LT(max_abs_difference(got, kernels::reference::outer_sum_nt(a1, b1, a2, b2)), 1e-14);
  const Matrix want = kernels::reference::matmul_nt(a1, b1) + kernels::reference::matmul_nt(a2, b2);
  EXPECT_LT(max_abs_difference(got, want), 1e-13);
}

TEST(Kernels, NormalizationBackwardMatchesReference) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Graph g = random_graph(30, 0.15, 3, 2, seed);
    const auto adj = normalize_adjacency(g);
    const Matrix gbar = random_matrix(30, 30, seed + 7);
    EXPECT_LT(max_relative_difference(kernels::normalization_backward(gbar, adj.matrix, adj.degree),
                                      kernels::reference::normalization_backward(gbar, adj.matrix,
                                                                                 adj.degree)),
              1e-12);
  }
}

TEST(Kernels, SymmetrizeZeroesDiagonal) {
  const Matrix m = random_matrix(15, 15, 3);
  const Matrix s = kernels::symmetrize_zero_diagonal(m);
  EXPECT_EQ(s, kernels::reference::symmetrize_zero_diagonal(m));
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(s(i, i), 0.0);
    for (std::size_t j = 0; j < 15; ++j)
      if (i != j) EXPECT_DOUBLE_EQ(s(i, j), 0.5 * (m(i, j) + m(j, i)));
  }
}

TEST(Kernels, ShapeMismatchThrows) {
  EXPECT_THROW(kernels::matmul(Matrix(2, 3), Matrix(2, 3)), std::invalid_argument);
  EXPECT_THROW(kernels::matmul_tn(Matrix(2, 3), Matrix(3, 3)), std::invalid_argument);
  EXPECT_THROW(kernels::spmm(CsrMatrix::from_dense(Matrix(2, 3)), Matrix(2, 1)),
               std::invalid_argument);
}

TEST(Csr, RoundTripsThroughDense) {
  const CsrMatrix s = random_sparse(12, 17, 0.2, 9);
  EXPECT_EQ(CsrMatrix::from_dense(s.to_dense()).col_idx, s.col_idx);
  EXPECT_EQ(s.transposed().to_dense(), s.to_dense().transposed());
  EXPECT_EQ(s.row_ptr.size(), 13u);
}

}  // namespace
}  // namespace caatk
