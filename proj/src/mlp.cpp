#include "symfs/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "symfs/error.hpp"
#include "symfs/rng.hpp"

namespace symfs {

Mlp::Mlp(std::size_t input_dim, const std::vector<std::size_t>& widths, std::uint64_t seed) : input_dim_(input_dim) {
  if (input_dim == 0) throw ConfigError("backbone input dimension must be positive");
  Rng rng(seed);
  std::size_t in = input_dim;
  for (std::size_t width : widths) {
    if (width == 0) throw ConfigError("backbone widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer{Matrix(width, in), std::vector<double>(width)};
    for (double& v : layer.weight.data) v = rng.uniform(-bound, bound);
    for (double& v : layer.bias) v = rng.uniform(-bound, bound);
    layers_.push_back(std::move(layer));
    in = width;
  }
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const {
  if (x.cols != input_dim_) throw ConfigError("backbone input width mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Matrix h = x;
  for (const auto& layer : layers_) {
    Matrix z = matmul_transposed(h, layer.weight);
    for (std::size_t b = 0; b < z.rows; ++b) {
      auto row = z.row(b);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = std::max(0.0, row[j] + layer.bias[j]);
    }
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->outputs.push_back(z);
    }
    h = std::move(z);
  }
  return h;
}

std::vector<std::vector<double>> Mlp::backward(const Cache& cache, const Matrix& d_output, Matrix* d_input) const {
  std::vector<std::vector<double>> grads(2 * layers_.size());
  Matrix g = d_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const Matrix& out = cache.outputs[l];
    // ReLU gate: zero where the activation was clipped.
    for (std::size_t k = 0; k < g.data.size(); ++k)
      if (out.data[k] <= 0.0) g.data[k] = 0.0;
    grads[2 * l] = matmul_lhs_transposed(g, cache.inputs[l]).data;
    std::vector<double> d_bias(layer.bias.size(), 0.0);
    for (std::size_t b = 0; b < g.rows; ++b) axpy(1.0, g.row(b), d_bias);
    grads[2 * l + 1] = std::move(d_bias);
    if (l > 0 || d_input) g = matmul(g, layer.weight);
  }
  if (d_input) *d_input = std::move(g);
  return grads;
}

std::vector<std::span<double>> Mlp::parameters() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers_) {
    out.emplace_back(layer.weight.data);
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> Mlp::parameters() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers_) {
    out.emplace_back(layer.weight.data);
    out.emplace_back(layer.bias);
  }
  return out;
}

}  // namespace symfs
