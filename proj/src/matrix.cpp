#include "s2p/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "s2p/errors.hpp"

namespace s2p {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ShapeError("matrix dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, double value) : Matrix(rows, cols) { fill(value); }

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void check_inner(int a, int b, const char* what) {
  if (a != b) throw ShapeError(std::string("matmul inner dimension mismatch in ") + what);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  add_matmul(c, a, b);
  return c;
}

void add_matmul(Matrix& c, const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "A*B");
  if (c.rows() != a.rows() || c.cols() != b.cols()) throw ShapeError("matmul output shape mismatch");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b.row(p);
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void add_matmul_nt(Matrix& c, const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "A*B^T");
  if (c.rows() != a.rows() || c.cols() != b.rows()) throw ShapeError("matmul_nt output shape mismatch");
  const int m = a.rows(), k = a.cols(), n = b.rows();
  for (int i = 0; i < m; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) {
      const double* bj = b.row(j);
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void add_matmul_tn(Matrix& c, const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "A^T*B");
  if (c.rows() != a.cols() || c.cols() != b.cols()) throw ShapeError("matmul_tn output shape mismatch");
  const int m = a.cols(), k = a.rows(), n = b.cols();
  for (int p = 0; p < k; ++p) {
    const double* ap = a.row(p);
    const double* bp = b.row(p);
    for (int i = 0; i < m; ++i) {
      const double av = ap[i];
      double* ci = c.row(i);
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void axpy(Matrix& y, double alpha, const Matrix& x) {
  if (!y.same_shape(x)) throw ShapeError("axpy shape mismatch");
  double* yd = y.data();
  const double* xd = x.data();
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) yd[i] += alpha * xd[i];
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

bool bits_equal(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace s2p
