#pragma once

// Desk-scale training: ReLU MLP backbone + classifier head, SGD with
// momentum, weight decay and step learning-rate decay.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "symfs/dataset.hpp"
#include "symfs/geometry.hpp"
#include "symfs/head.hpp"
#include "symfs/mlp.hpp"

namespace symfs {

/// Loss values above this are treated as divergence.
inline constexpr double kDivergenceLoss = 1e4;

/// True for non-finite losses and losses above kDivergenceLoss.
bool is_divergent_loss(double loss);

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::vector<double> lr_decay_fractions{0.5, 0.75};
  std::uint64_t seed = 1;
  HeadSpec head;
  std::vector<std::size_t> widths{64, 64};

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  /// ceil(f * epochs) for each decay fraction f.
  std::vector<std::size_t> lr_milestones() const;
  /// lr0 * 0.1^(number of milestones <= epoch), epochs counted from 0.
  double lr_at(std::size_t epoch) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // on training-mode logits
  double eval_loss = 0.0;
  double eval_acc = 0.0;
  double plane_delta_deg = 0.0;  // NaN for heads without a symmetry plane
  double n1_step_deg = 0.0;      // NaN for heads without a symmetry plane
  double seconds = 0.0;          // train + eval wall time
  double train_seconds = 0.0;    // SGD pass only
};

struct RunLog {
  std::vector<EpochRecord> epochs;
  double best_eval_acc = 0.0;
  bool diverged = false;

  /// First epoch whose eval accuracy reaches `fraction` of best_eval_acc.
  std::optional<std::size_t> epochs_to_fraction_of_best(double fraction) const;
};

/// Largest principal angle (degrees) between span{prev.n1, prev.n2} and
/// span{cur.n1, cur.n2}.
double plane_rotation_monitor(const PlaneBasis& prev, const PlaneBasis& cur);

/// Runs training one epoch at a time. Deterministic per config seed: the
/// backbone, head and per-epoch shuffles draw from independent streams of it.
class Trainer {
 public:
  Trainer(TrainConfig config, const DatasetPair& data);

  /// Runs the next epoch and appends its record. Stops the run (done() becomes
  /// true) on divergence.
  const EpochRecord& run_epoch();
  bool done() const { return diverged_ || log_.epochs.size() >= config_.epochs; }

  const RunLog& log() const { return log_; }
  const TrainConfig& config() const { return config_; }
  const Mlp& backbone() const { return backbone_; }
  const ClassifierHead& head() const { return *head_; }

  /// Eval-set (loss, accuracy) with inference logits.
  std::pair<double, double> evaluate() const;

 private:
  void sgd_step(const std::vector<std::vector<double>>& backbone_grads, const Gradients& head_grads, double lr);

  TrainConfig config_;
  const DatasetPair& data_;
  Mlp backbone_;
  std::unique_ptr<ClassifierHead> head_;
  std::vector<std::vector<double>> velocity_;
  std::optional<PlaneBasis> last_basis_;
  std::size_t iteration_ = 0;
  bool diverged_ = false;
  RunLog log_;
};

struct TrainedModel {
  RunLog log;
  Mlp backbone;
  std::unique_ptr<ClassifierHead> head;
};

TrainedModel train_model(const TrainConfig& config, const DatasetPair& data);
RunLog train(const TrainConfig& config, const DatasetPair& data);

/// epoch,train_loss,train_acc,eval_loss,eval_acc,plane_delta_deg,seconds
void write_runlog_csv(std::ostream& out, const RunLog& log);
/// epoch,lr,plane_delta_deg,n1_step_deg
void write_monitor_csv(std::ostream& out, const RunLog& log);

struct BenchRow {
  HeadKind kind;
  double mean_sec = 0.0;
  double std_sec = 0.0;
  std::size_t repeats = 0;
};

/// Seconds per training epoch for each head under the same backbone and data.
/// One warm-up epoch per head, then `repeats` timed epochs, interleaved across
/// heads. std is the sample standard deviation.
std::vector<BenchRow> bench_epoch(const TrainConfig& base, const DatasetPair& data, std::size_t repeats,
                                  const std::vector<HeadSpec>& heads);

/// kind,mean_sec,std_sec,repeats
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace symfs
