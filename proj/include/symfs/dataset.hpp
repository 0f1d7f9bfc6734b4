#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "symfs/linalg.hpp"

namespace symfs {

enum class Split { Train, Eval };

struct Dataset {
  Matrix features;          // N × d_in
  std::vector<int> labels;  // N, in [0, classes)
  std::size_t classes = 0;
  Split split = Split::Train;

  std::size_t size() const { return labels.size(); }
  std::size_t input_dim() const { return features.cols; }
};

struct DatasetPair {
  Dataset train;
  Dataset eval;
};

/// Throws ConfigError on NaN features, out-of-range labels or shape mismatch.
void validate(const Dataset& data);

struct BlobSpec {
  std::size_t classes = 10;
  std::size_t input_dim = 64;
  std::size_t per_class = 625;
  double spread = 0.05;
  std::uint64_t seed = 7;
};

/// Isotropic Gaussian clusters (stddev = spread) around unit-norm centers.
/// Each class keeps floor(0.8 per_class) samples for training, the rest for
/// evaluation. Deterministic per seed.
DatasetPair make_blobs(const BlobSpec& spec);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled to [0, 1] and flattened row-major.
/// Throws FormatError on bad magic or truncation, CountMismatch when the
/// image and label counts differ.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split = Split::Train);

/// Leading `train_fraction` of rows for training, the remainder for evaluation.
DatasetPair split_dataset(const Dataset& all, double train_fraction);

}  // namespace symfs
