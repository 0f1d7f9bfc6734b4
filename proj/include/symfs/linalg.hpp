#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace symfs {

/// Dense real vector in feature space. Dimension is fixed at construction.
class VectorD {
 public:
  VectorD() = default;
  explicit VectorD(std::size_t d, double fill = 0.0) : data_(d, fill) {}
  VectorD(std::initializer_list<double> values) : data_(values) {}
  explicit VectorD(std::vector<double> values) : data_(std::move(values)) {}
  explicit VectorD(std::span<const double> values) : data_(values.begin(), values.end()) {}

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  VectorD& operator+=(const VectorD& o);
  VectorD& operator-=(const VectorD& o);
  VectorD& operator*=(double s);

  bool all_finite() const;

  friend bool operator==(const VectorD&, const VectorD&) = default;

 private:
  std::vector<double> data_;
};

VectorD operator+(VectorD a, const VectorD& b);
VectorD operator-(VectorD a, const VectorD& b);
VectorD operator*(double s, VectorD v);
VectorD operator*(VectorD v, double s);

double dot(std::span<const double> a, std::span<const double> b);
inline double dot(const VectorD& a, const VectorD& b) { return dot(a.span(), b.span()); }
double norm(std::span<const double> a);
inline double norm(const VectorD& a) { return norm(a.span()); }

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Unit basis vector e_k in R^d.
VectorD unit_vector(std::size_t d, std::size_t k);

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// out = a * b^T  (a: m×k, b: n×k) -> m×n
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
// out = a * b  (a: m×k, b: k×n)
Matrix matmul(const Matrix& a, const Matrix& b);
// out = a^T * b  (a: k×m, b: k×n) -> m×n
Matrix matmul_lhs_transposed(const Matrix& a, const Matrix& b);

}  // namespace symfs
