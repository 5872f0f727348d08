#pragma once

#include <cstddef>
#include <vector>

namespace s2p {

// Dense row-major matrix of doubles. Column vectors are R x 1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-initialized
  Matrix(int rows, int cols, double value);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v);
  void zero() { fill(0.0); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);

// Accumulating products used by backward passes.
void add_matmul(Matrix& c, const Matrix& a, const Matrix& b);     // C += A * B
void add_matmul_nt(Matrix& c, const Matrix& a, const Matrix& b);  // C += A * B^T
void add_matmul_tn(Matrix& c, const Matrix& a, const Matrix& b);  // C += A^T * B

void axpy(Matrix& y, double alpha, const Matrix& x);  // y += alpha * x

double max_abs_diff(const Matrix& a, const Matrix& b);
bool bits_equal(const Matrix& a, const Matrix& b);

}  // namespace s2p
