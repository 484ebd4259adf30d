#include "caattack/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <vector>

namespace caatk::kernels {

int max_threads() { return omp_get_max_threads(); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.rows(), "matmul");
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t m = b.cols();
  Matrix out(a.rows(), m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    const double* ar = a.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double v = ar[k];
      if (v == 0.0) continue;
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += v * br[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn");
  const auto k_dim = static_cast<std::ptrdiff_t>(a.cols());
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  Matrix out(a.cols(), m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < k_dim; ++r) {
    double* o = out.row(r).data();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = a(i, r);
      if (v == 0.0) continue;
      const double* br = b.row(i).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += v * br[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.cols(), "matmul_nt");
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t m = b.rows();
  const std::size_t inner = a.cols();
  Matrix out(a.rows(), m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* ar = a.row(i).data();
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* br = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ar[k] * br[k];
      o[j] = s;
    }
  }
  return out;
}

Matrix spmm(const CsrMatrix& s, const Matrix& b) {
  require_shape(s.cols == b.rows(), "spmm");
  const auto n = static_cast<std::ptrdiff_t>(s.rows);
  const std::size_t m = b.cols();
  Matrix out(s.rows, m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
      const double v = s.values[k];
      const double* br = b.row(s.col_idx[k]).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += v * br[j];
    }
  }
  return out;
}

Matrix outer_sum_nt(const Matrix& a1, const Matrix& b1, const Matrix& a2, const Matrix& b2) {
  require_shape(a1.cols() == b1.cols() && a2.cols() == b2.cols() && a1.rows() == a2.rows() &&
                    b1.rows() == b2.rows(),
                "outer_sum_nt");
  const auto n = static_cast<std::ptrdiff_t>(a1.rows());
  const std::size_t m = b1.rows();
  const std::size_t k1 = a1.cols();
  const std::size_t k2 = a2.cols();
  Matrix out(a1.rows(), m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* x1 = a1.row(i).data();
    const double* x2 = a2.row(i).data();
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* y1 = b1.row(j).data();
      const double* y2 = b2.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < k1; ++k) s += x1[k] * y1[k];
      for (std::size_t k = 0; k < k2; ++k) s += x2[k] * y2[k];
      o[j] = s;
    }
  }
  return out;
}

Matrix normalization_backward(const Matrix& gbar, const CsrMatrix& ahat,
                              std::span<const double> degree) {
  const std::size_t n = gbar.rows();
  require_shape(gbar.cols() == n && ahat.rows == n && degree.size() == n,
                "normalization_backward");
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  std::vector<double> row_term(n, 0.0);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < sn; ++k) {
    double s = 0.0;
    for (std::size_t e = ahat.row_ptr[k]; e < ahat.row_ptr[k + 1]; ++e) {
      const std::size_t j = ahat.col_idx[e];
      s += (gbar(k, j) + gbar(j, k)) * ahat.values[e];
    }
    row_term[k] = -0.5 * s / degree[k];
  }
  Matrix out(n, n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < sn; ++k) {
    const double* g = gbar.row(k).data();
    double* o = out.row(k).data();
    const double sk = inv_sqrt[k];
    const double c = row_term[k];
    for (std::size_t l = 0; l < n; ++l) o[l] = g[l] * sk * inv_sqrt[l] + c;
  }
  return out;
}

Matrix symmetrize_zero_diagonal(const Matrix& m) {
  require_shape(m.rows() == m.cols(), "symmetrize");
  const std::size_t n = m.rows();
  Matrix out(n, n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < n; ++j)
      o[j] = static_cast<std::size_t>(i) == j ? 0.0 : 0.5 * (m(i, j) + m(j, i));
  }
  return out;
}

namespace reference {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.rows(), "matmul");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn");
  Matrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.cols(); ++r)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, r) * b(i, j);
      out(r, j) = s;
    }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.cols(), "matmul_nt");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  return out;
}

Matrix spmm(const CsrMatrix& s, const Matrix& b) { return matmul(s.to_dense(), b); }

Matrix outer_sum_nt(const Matrix& a1, const Matrix& b1, const Matrix& a2, const Matrix& b2) {
  return matmul_nt(a1, b1) + matmul_nt(a2, b2);
}

Matrix normalization_backward(const Matrix& gbar, const CsrMatrix& ahat,
                              std::span<const double> degree) {
  const std::size_t n = gbar.rows();
  const Matrix a = ahat.to_dense();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    // d Â_ij / d D_kk is nonzero only for i == k or j == k.
    double dk = 0.0;
    for (std::size_t j = 0; j < n; ++j) dk += gbar(k, j) * (-0.5 * a(k, j) / degree[k]);
    for (std::size_t i = 0; i < n; ++i) dk += gbar(i, k) * (-0.5 * a(i, k) / degree[k]);
    for (std::size_t l = 0; l < n; ++l)
      out(k, l) = gbar(k, l) / std::sqrt(degree[k] * degree[l]) + dk;
  }
  return out;
}

Matrix symmetrize_zero_diagonal(const Matrix& m) {
  Matrix out = 0.5 * (m + m.transposed());
  for (std::size_t i = 0; i < out.rows(); ++i) out(i, i) = 0.0;
  return out;
}

}  // namespace reference
}  // namespace caatk::kernels
