#pragma once

// Classifier heads with analytic forward and backward passes.
//
// SymmetricalHead owns only two free vectors (v1, v2). Every forward pass
// orthonormalizes them into a plane basis and rotates n1 by 2*pi*i/n to get
// the n class weights, so the weights always form a symmetric layout. The
// comparison heads (plain FC, additive angular margin, multiplicative angular
// margin) own a full n×d weight matrix.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symfs/geometry.hpp"
#include "symfs/linalg.hpp"

namespace symfs {

enum class HeadKind : std::uint32_t { Symmetric = 1, FC = 2, ArcFace = 3, SphereFace = 4 };

std::string_view to_string(HeadKind kind);
/// Accepts "symmetric", "fc", "arcface", "sphereface". Throws ConfigError otherwise.
HeadKind parse_head_kind(std::string_view name);

/// Parameter and input gradients. `params` follows the order of
/// ClassifierHead::parameters(): (v1, v2) for the symmetric head, (W, bias)
/// for FC, (W) for the margin heads. Matrices are flattened row-major.
struct Gradients {
  std::vector<std::vector<double>> params;
  Matrix d_input;
};

class ClassifierHead {
 public:
  virtual ~ClassifierHead() = default;

  virtual HeadKind kind() const = 0;
  virtual std::size_t classes() const = 0;
  virtual std::size_t input_dim() const = 0;

  /// Training logits (margins applied where the head has one).
  virtual Matrix forward(const Matrix& x, std::span<const int> labels, std::size_t iteration) const = 0;
  /// Inference logits, no margin.
  virtual Matrix predict(const Matrix& x) const = 0;
  /// Gradients of sum(upstream ⊙ forward(x, labels, iteration)).
  virtual Gradients backward(const Matrix& x, std::span<const int> labels, std::size_t iteration,
                             const Matrix& upstream) const = 0;

  virtual std::vector<std::span<double>> parameters() = 0;
  virtual std::vector<std::span<const double>> parameters() const = 0;
  virtual std::unique_ptr<ClassifierHead> clone() const = 0;
};

class SymmetricalHead final : public ClassifierHead {
 public:
  SymmetricalHead(VectorD v1, VectorD v2, double sigma, std::size_t n);

  HeadKind kind() const override { return HeadKind::Symmetric; }
  std::size_t classes() const override { return n_; }
  std::size_t input_dim() const override { return v1.dim(); }

  Matrix forward(const Matrix& x, std::span<const int> labels, std::size_t iteration) const override;
  Matrix predict(const Matrix& x) const override;
  Gradients backward(const Matrix& x, std::span<const int> labels, std::size_t iteration,
                     const Matrix& upstream) const override;

  std::vector<std::span<double>> parameters() override { return {v1.span(), v2.span()}; }
  std::vector<std::span<const double>> parameters() const override { return {v1.span(), v2.span()}; }
  std::unique_ptr<ClassifierHead> clone() const override { return std::make_unique<SymmetricalHead>(*this); }

  double sigma() const { return sigma_; }
  /// Throws DegenerateInput when v1, v2 have collapsed.
  PlaneBasis basis() const { return gram_schmidt(v1, v2); }
  SymmetricLayout layout() const { return build_symmetric_layout(basis(), n_); }

  VectorD v1;
  VectorD v2;

 private:
  double sigma_;
  std::size_t n_;
};

class FcHead final : public ClassifierHead {
 public:
  FcHead(Matrix weight, std::vector<double> bias);

  HeadKind kind() const override { return HeadKind::FC; }
  std::size_t classes() const override { return weight.rows; }
  std::size_t input_dim() const override { return weight.cols; }

  Matrix forward(const Matrix& x, std::span<const int>, std::size_t) const override { return predict(x); }
  Matrix predict(const Matrix& x) const override;
  Gradients backward(const Matrix& x, std::span<const int> labels, std::size_t iteration,
                     const Matrix& upstream) const override;

  std::vector<std::span<double>> parameters() override { return {weight.data, bias}; }
  std::vector<std::span<const double>> parameters() const override { return {weight.data, bias}; }
  std::unique_ptr<ClassifierHead> clone() const override { return std::make_unique<FcHead>(*this); }

  Matrix weight;
  std::vector<double> bias;
};

class ArcFaceHead final : public ClassifierHead {
 public:
  ArcFaceHead(Matrix weight, double sigma, double margin);

  HeadKind kind() const override { return HeadKind::ArcFace; }
  std::size_t classes() const override { return weight.rows; }
  std::size_t input_dim() const override { return weight.cols; }

  Matrix forward(const Matrix& x, std::span<const int> labels, std::size_t iteration) const override;
  Matrix predict(const Matrix& x) const override;
  Gradients backward(const Matrix& x, std::span<const int> labels, std::size_t iteration,
                     const Matrix& upstream) const override;

  std::vector<std::span<double>> parameters() override { return {weight.data}; }
  std::vector<std::span<const double>> parameters() const override { return {weight.data}; }
  std::unique_ptr<ClassifierHead> clone() const override { return std::make_unique<ArcFaceHead>(*this); }

  double sigma() const { return sigma_; }
  double margin() const { return margin_; }

  Matrix weight;

 private:
  double sigma_;
  double margin_;
};

/// Softmax-supervision blend for the multiplicative margin:
/// lambda(it) = max(lambda_min, lambda0 / (1 + decay * it)).
struct SphereFaceAnneal {
  double lambda0 = 1000.0;
  double lambda_min = 5.0;
  double decay = 0.1;

  double lambda_at(std::size_t iteration) const;
};

class SphereFaceHead final : public ClassifierHead {
 public:
  SphereFaceHead(Matrix weight, int margin, SphereFaceAnneal anneal = {});

  HeadKind kind() const override { return HeadKind::SphereFace; }
  std::size_t classes() const override { return weight.rows; }
  std::size_t input_dim() const override { return weight.cols; }

  Matrix forward(const Matrix& x, std::span<const int> labels, std::size_t iteration) const override;
  Matrix predict(const Matrix& x) const override;
  Gradients backward(const Matrix& x, std::span<const int> labels, std::size_t iteration,
                     const Matrix& upstream) const override;

  std::vector<std::span<double>> parameters() override { return {weight.data}; }
  std::vector<std::span<const double>> parameters() const override { return {weight.data}; }
  std::unique_ptr<ClassifierHead> clone() const override { return std::make_unique<SphereFaceHead>(*this); }

  int margin() const { return margin_; }
  const SphereFaceAnneal& anneal() const { return anneal_; }

  Matrix weight;

 private:
  int margin_;
  SphereFaceAnneal anneal_;
};

// Free-function kernels. Each head delegates to these.

/// logits[b][i] = sigma * cos(angle(x_b, w_i)) over the layout derived from (v1, v2).
Matrix forward_symmetric(const SymmetricalHead& head, const Matrix& x);
Gradients backward_symmetric(const SymmetricalHead& head, const Matrix& x, const Matrix& upstream);

/// x W^T + bias
Matrix forward_fc(const Matrix& weight, std::span<const double> bias, const Matrix& x);
Gradients backward_fc(const Matrix& weight, const Matrix& x, const Matrix& upstream);

/// sigma cos(theta_j) for j != y, sigma cos(theta_y + m) for the target; when
/// theta_y + m > pi the target keeps sigma cos(theta_y).
Matrix forward_arcface(const Matrix& weight, const Matrix& x, std::span<const int> labels, double sigma,
                       double margin);
Gradients backward_arcface(const Matrix& weight, const Matrix& x, std::span<const int> labels, double sigma,
                           double margin, const Matrix& upstream);

/// psi(theta) = (-1)^k cos(m theta) - 2k on [k pi/m, (k+1) pi/m].
double sphereface_psi(double theta, int margin);

/// ‖x‖ cos(theta_j) for j != y; ‖x‖ (lambda cos(theta_y) + psi(theta_y)) / (1 + lambda) for the target.
Matrix forward_sphereface(const Matrix& weight, const Matrix& x, std::span<const int> labels, int margin,
                          double lambda);
Gradients backward_sphereface(const Matrix& weight, const Matrix& x, std::span<const int> labels, int margin,
                              double lambda, const Matrix& upstream);

struct HeadSpec {
  HeadKind kind = HeadKind::Symmetric;
  double sigma = 16.0;   // symmetric and ArcFace
  double margin = 0.1;   // ArcFace angle (rad); SphereFace integer multiplier
};

/// Deterministic per seed. Symmetric: v1, v2 ~ U(0,1)^d, redrawn (at most 100
/// times) until Gram-Schmidt is non-degenerate. Others: W ~ U(-1/sqrt d, 1/sqrt d), zero bias.
std::unique_ptr<ClassifierHead> init_head(const HeadSpec& spec, std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace symfs
