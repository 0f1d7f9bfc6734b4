#pragma once

#include <span>
#include <vector>

#include "symfs/linalg.hpp"

namespace symfs {

struct LossResult {
  double loss = 0.0;
  Matrix d_logits;  // (softmax - onehot) / batch
};

/// Mean softmax cross-entropy over the batch, stabilized by max-subtraction.
LossResult cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Row-wise argmax; ties resolve to the lowest index.
std::vector<int> argmax_rows(const Matrix& logits);

/// Fraction of rows whose argmax equals the label.
double accuracy(const Matrix& logits, std::span<const int> labels);

}  // namespace symfs
