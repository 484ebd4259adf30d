#include "caattack/matrix.hpp"

#include <cmath>

namespace caatk {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    require_shape(rows[i].size() == c, "ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_shape(rows_ == other.rows_ && cols_ == other.cols_, "matrix +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_shape(rows_ == other.rows_ && cols_ == other.cols_, "matrix -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

double max_relative_difference(const Matrix& a, const Matrix& b, double floor) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "relative difference");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.data()[i];
    const double y = b.data()[i];
    const double scale = std::max({std::abs(x), std::abs(y), floor});
    if (x == y) continue;
    worst = std::max(worst, std::abs(x - y) / scale);
  }
  return worst;
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "abs difference");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

CsrMatrix CsrMatrix::from_dense(const Matrix& m) {
  CsrMatrix s;
  s.rows = m.rows();
  s.cols = m.cols();
  s.row_ptr.assign(1, 0);
  s.row_ptr.reserve(m.rows() + 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (v != 0.0) {
        s.col_idx.push_back(static_cast<std::uint32_t>(j));
        s.values.push_back(v);
      }
    }
    s.row_ptr.push_back(s.values.size());
  }
  return s;
}

CsrMatrix CsrMatrix::transposed() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (auto c : col_idx) ++t.row_ptr[c + 1];
  for (std::size_t i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const std::size_t dst = cursor[col_idx[k]]++;
      t.col_idx[dst] = static_cast<std::uint32_t>(r);
      t.values[dst] = values[k];
    }
  }
  return t;
}

Matrix CsrMatrix::to_dense() const {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) m(r, col_idx[k]) = values[k];
  return m;
}

}  // namespace caatk
