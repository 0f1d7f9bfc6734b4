#include "symfs/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "symfs/error.hpp"
#include "symfs/rng.hpp"

namespace symfs {

void validate(const Dataset& data) {
  if (data.features.rows != data.labels.size()) throw ConfigError("dataset: feature rows differ from label count");
  for (double v : data.features.data)
    if (std::isnan(v)) throw ConfigError("dataset: NaN feature");
  for (int y : data.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= data.classes) throw ConfigError("dataset: label out of range");
}

DatasetPair make_blobs(const BlobSpec& spec) {
  if (spec.classes < 3) throw InvalidClassCount(spec.classes);
  if (!(spec.spread > 0.0)) throw ConfigError("blobs: spread must be positive");
  if (spec.input_dim < 2) throw ConfigError("blobs: input dimension must be at least 2");
  const auto n_train = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(spec.per_class)));
  const std::size_t n_eval = spec.per_class - n_train;
  if (n_train == 0 || n_eval == 0) throw ConfigError("blobs: per_class too small for an 80/20 split");

  Rng center_rng(derive_seed(spec.seed, 0));
  std::vector<VectorD> centers;
  for (std::size_t c = 0; c < spec.classes; ++c) centers.push_back(center_rng.unit_vector(spec.input_dim));

  DatasetPair out;
  out.train = {Matrix(n_train * spec.classes, spec.input_dim), {}, spec.classes, Split::Train};
  out.eval = {Matrix(n_eval * spec.classes, spec.input_dim), {}, spec.classes, Split::Eval};
  Rng rng(derive_seed(spec.seed, 1));
  std::size_t tr = 0, ev = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t k = 0; k < spec.per_class; ++k) {
      const bool to_train = k < n_train;
      Dataset& dst = to_train ? out.train : out.eval;
      auto row = dst.features.row(to_train ? tr++ : ev++);
      for (std::size_t i = 0; i < spec.input_dim; ++i) row[i] = centers[c][i] + spec.spread * rng.normal();
      dst.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

DatasetPair split_dataset(const Dataset& all, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split fraction must be in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(all.size())));
  if (cut == 0 || cut == all.size()) throw ConfigError("dataset too small to split");
  auto slice = [&](std::size_t lo, std::size_t hi, Split split) {
    Dataset d{Matrix(hi - lo, all.input_dim()), {}, all.classes, split};
    std::copy(all.features.data.begin() + static_cast<std::ptrdiff_t>(lo * all.input_dim()),
              all.features.data.begin() + static_cast<std::ptrdiff_t>(hi * all.input_dim()), d.features.data.begin());
    d.labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(lo),
                    all.labels.begin() + static_cast<std::ptrdiff_t>(hi));
    return d;
  };
  return {slice(0, cut, Split::Train), slice(cut, all.size(), Split::Eval)};
}

}  // namespace symfs
