#pragma once

// Randomized numerical checks of the three layout lemmas:
//   1  a symmetric layout sums to zero,
//   2  the criterion sum vanishes at every layout angle, seen from a random
//      plane through the class weight,
//   3  projections of unit a, b onto a plane through a + b have equal norms
//      and equal angles to a + b.

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace symfs {

struct LemmaSuiteConfig {
  std::size_t n_min = 3;
  std::size_t n_max = 32;
  std::vector<std::size_t> dims{2, 3, 8, 32};
  std::size_t trials = 50;
  double tol = 1e-9;
  std::uint64_t seed = 1;

  /// Throws ConfigError for empty ranges, d < 2 and n < 3.
  void validate() const;
};

struct LemmaRow {
  int lemma = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t trial = 0;
  double residual = 0.0;
  bool pass = false;
};

std::vector<LemmaRow> run_lemma_suite(const LemmaSuiteConfig& config);

/// lemma,n,d,trial,residual,pass
void write_lemma_csv(std::ostream& out, const std::vector<LemmaRow>& rows);

}  // namespace symfs
