#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "symfs/linalg.hpp"

namespace symfs {

struct DenseLayer {
  Matrix weight;  // out × in
  std::vector<double> bias;
};

/// Fully connected ReLU backbone with manual backprop. Every layer is
/// followed by a ReLU, so the output features are non-negative. With no
/// hidden widths the backbone is the identity.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> outputs; // post-activation output of each layer
  };

  Mlp() = default;
  /// Weights and biases ~ U(-1/sqrt(in), 1/sqrt(in)).
  Mlp(std::size_t input_dim, const std::vector<std::size_t>& widths, std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.empty() ? input_dim_ : layers_.back().weight.rows; }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;

  /// Parameter gradients in parameters() order; `d_input`, when given,
  /// receives the gradient with respect to the backbone input.
  std::vector<std::vector<double>> backward(const Cache& cache, const Matrix& d_output,
                                            Matrix* d_input = nullptr) const;

  /// (W_0, b_0, W_1, b_1, ...)
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

}  // namespace symfs
