#pragma once

// Seed-repeat stability study: every (head, sigma, margin) cell of a grid is
// trained `repeats` times on the same data with different seeds.

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "symfs/dataset.hpp"
#include "symfs/head.hpp"
#include "symfs/trainer.hpp"

namespace symfs {

struct StabilityRow {
  HeadSpec head;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  double best_eval_acc = 0.0;
  bool diverged = false;
  std::size_t epochs_run = 0;
};

struct CellSummary {
  HeadSpec head;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  /// max - min best accuracy over non-diverged repeats (0 with fewer than 2).
  double accuracy_spread = 0.0;
  /// True when some repeats diverged and others did not.
  bool divergence_disagreement() const { return diverged > 0 && diverged < runs; }
};

struct StabilityTable {
  std::vector<StabilityRow> rows;  // grid order, then repeat order

  std::vector<CellSummary> summarize() const;
};

/// Seed of repeat r: derive_seed(base_seed, r). Identical across cells, so
/// repeat r of every cell shares its seed.
std::uint64_t repeat_seed(std::uint64_t base_seed, std::size_t repeat);

/// Runs all cells; independent runs execute on up to `threads` workers
/// (0 = hardware concurrency). Row order does not depend on scheduling.
StabilityTable stability_study(const std::vector<HeadSpec>& grid, std::size_t repeats, const TrainConfig& base,
                               const DatasetPair& data, std::size_t threads = 0);

/// Parses "kind:sigma=a,b,...:m=x,y;kind2:..." into the cartesian grid of
/// cells. Missing sigma/m fall back to `defaults`.
std::vector<HeadSpec> parse_grid(std::string_view text, const HeadSpec& defaults = {});

/// kind,sigma,m,repeat,seed,best_eval_acc_or_x  (accuracy in percent, "x" on divergence)
void write_stability_csv(std::ostream& out, const StabilityTable& table);

}  // namespace symfs
