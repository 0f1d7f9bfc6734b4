#include "symfs/loss.hpp"

#include <algorithm>
#include <cmath>

#include "symfs/error.hpp"

namespace symfs {

LossResult cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows) throw ConfigError("cross_entropy: label count differs from batch size");
  if (logits.rows == 0) throw ConfigError("cross_entropy: empty batch");
  LossResult out;
  out.d_logits = Matrix(logits.rows, logits.cols);
  const double inv_batch = 1.0 / static_cast<double>(logits.rows);
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) throw ConfigError("cross_entropy: label out of range");
    const auto row = logits.row(b);
    const double zmax = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (double z : row) denom += std::exp(z - zmax);
    const double log_denom = std::log(denom);
    total += log_denom - (row[static_cast<std::size_t>(y)] - zmax);
    auto grad = out.d_logits.row(b);
    for (std::size_t j = 0; j < row.size(); ++j) grad[j] = std::exp(row[j] - zmax - log_denom) * inv_batch;
    grad[static_cast<std::size_t>(y)] -= inv_batch;
  }
  out.loss = total * inv_batch;
  return out;
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows);
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const auto row = logits.row(b);
    out[b] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const Matrix& logits, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  const auto pred = argmax_rows(logits);
  std::size_t hits = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) hits += pred[b] == labels[b];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace symfs
