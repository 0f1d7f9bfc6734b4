#include "symfs/linalg.hpp"

#include <cassert>
#include <cmath>

#include "symfs/error.hpp"

namespace symfs {

VectorD& VectorD::operator+=(const VectorD& o) {
  assert(o.dim() == dim());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

VectorD& VectorD::operator-=(const VectorD& o) {
  assert(o.dim() == dim());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

VectorD& VectorD::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

bool VectorD::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

VectorD operator+(VectorD a, const VectorD& b) { return a += b; }
VectorD operator-(VectorD a, const VectorD& b) { return a -= b; }
VectorD operator*(double s, VectorD v) { return v *= s; }
VectorD operator*(VectorD v, double s) { return v *= s; }

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

VectorD unit_vector(std::size_t d, std::size_t k) {
  VectorD e(d);
  e[k] = 1.0;
  return e;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols) throw ConfigError("ragged matrix rows");
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw ConfigError("matmul_transposed: inner dimension mismatch");
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) out(i, j) = dot(ar, b.row(j));
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ConfigError("matmul: inner dimension mismatch");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double s = a(i, k);
      if (s != 0.0) axpy(s, b.row(k), orow);
    }
  }
  return out;
}

Matrix matmul_lhs_transposed(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw ConfigError("matmul_lhs_transposed: inner dimension mismatch");
  Matrix out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double s = a(k, i);
      if (s != 0.0) axpy(s, brow, out.row(i));
    }
  }
  return out;
}

}  // namespace symfs
