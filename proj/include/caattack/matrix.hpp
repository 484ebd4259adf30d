#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace caatk {

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> values() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Matrix transposed() const;
  double frobenius_norm() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

// Largest |a - b| / max(|a|, |b|, floor) over all entries.
double max_relative_difference(const Matrix& a, const Matrix& b, double floor = 1e-300);
double max_abs_difference(const Matrix& a, const Matrix& b);

// Compressed sparse rows.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  static CsrMatrix from_dense(const Matrix& m);
  CsrMatrix transposed() const;
  Matrix to_dense() const;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("dimension mismatch: " + what);
}

}  // namespace caatk
