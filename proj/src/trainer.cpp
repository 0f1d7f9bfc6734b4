#include "symfs/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "symfs/csv.hpp"
#include "symfs/error.hpp"
#include "symfs/loss.hpp"
#include "symfs/rng.hpp"

namespace symfs {

namespace {

constexpr std::uint64_t kBackboneStream = 1;
constexpr std::uint64_t kHeadStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::size_t kEvalBatch = 1024;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

// Larger eigenvalue of the symmetric 2x2 matrix [[p, q], [q, r]], and the smaller one.
std::pair<double, double> eig2(double p, double q, double r) {
  const double mean = 0.5 * (p + r);
  const double rad = std::hypot(0.5 * (p - r), q);
  return {mean + rad, mean - rad};
}

void gather(const Dataset& data, std::span<const std::size_t> idx, Matrix& x, std::vector<int>& y) {
  x = Matrix(idx.size(), data.input_dim());
  y.resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::ranges::copy(data.features.row(idx[k]), x.row(k).begin());
    y[k] = data.labels[idx[k]];
  }
}

const SymmetricalHead* as_symmetric(const ClassifierHead& head) {
  return head.kind() == HeadKind::Symmetric ? static_cast<const SymmetricalHead*>(&head) : nullptr;
}

}  // namespace

bool is_divergent_loss(double loss) { return !std::isfinite(loss) || loss > kDivergenceLoss; }

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw ConfigError("lr0 must be a finite non-negative number");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  for (double f : lr_decay_fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("lr decay fractions must be in (0, 1]");
  if (!(head.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(head.margin >= 0.0)) throw ConfigError("margin must be non-negative");
}

std::vector<std::size_t> TrainConfig::lr_milestones() const {
  std::vector<std::size_t> out;
  for (double f : lr_decay_fractions)
    out.push_back(static_cast<std::size_t>(std::ceil(f * static_cast<double>(epochs) - 1e-9)));
  return out;
}

double TrainConfig::lr_at(std::size_t epoch) const {
  double lr = lr0;
  for (std::size_t m : lr_milestones())
    if (epoch >= m) lr *= 0.1;
  return lr;
}

std::optional<std::size_t> RunLog::epochs_to_fraction_of_best(double fraction) const {
  for (const auto& e : epochs)
    if (e.eval_acc >= fraction * best_eval_acc) return e.epoch;
  return std::nullopt;
}

double plane_rotation_monitor(const PlaneBasis& prev, const PlaneBasis& cur) {
  if (prev.dim() != cur.dim()) throw ConfigError("plane_rotation_monitor: dimension mismatch");
  // Cross-Gram M = A^T B; its smallest singular value is the cosine of the
  // largest principal angle. The residual R = B - A M has that angle's sine
  // as its largest singular value.
  const double m11 = dot(prev.n1, cur.n1), m12 = dot(prev.n1, cur.n2);
  const double m21 = dot(prev.n2, cur.n1), m22 = dot(prev.n2, cur.n2);
  const double cos_max = std::sqrt(std::max(eig2(m11 * m11 + m21 * m21, m11 * m12 + m21 * m22, m12 * m12 + m22 * m22).second, 0.0));

  VectorD r1 = cur.n1, r2 = cur.n2;
  axpy(-m11, prev.n1.span(), r1.span());
  axpy(-m21, prev.n2.span(), r1.span());
  axpy(-m12, prev.n1.span(), r2.span());
  axpy(-m22, prev.n2.span(), r2.span());
  const double sin_max = std::sqrt(std::max(eig2(dot(r1, r1), dot(r1, r2), dot(r2, r2)).first, 0.0));
  return rad_to_deg(std::atan2(sin_max, cos_max));
}

Trainer::Trainer(TrainConfig config, const DatasetPair& data) : config_(std::move(config)), data_(data) {
  config_.validate();
  validate(data_.train);
  validate(data_.eval);
  if (data_.train.classes != data_.eval.classes) throw ConfigError("train and eval class counts differ");
  if (data_.train.input_dim() != data_.eval.input_dim()) throw ConfigError("train and eval widths differ");
  if (data_.train.size() == 0) throw ConfigError("empty training set");

  backbone_ = Mlp(data_.train.input_dim(), config_.widths, derive_seed(config_.seed, kBackboneStream));
  head_ = init_head(config_.head, data_.train.classes, backbone_.output_dim(), derive_seed(config_.seed, kHeadStream));
  for (auto p : backbone_.parameters()) velocity_.emplace_back(p.size(), 0.0);
  for (auto p : head_->parameters()) velocity_.emplace_back(p.size(), 0.0);
  if (const auto* sym = as_symmetric(*head_)) last_basis_ = sym->basis();
}

void Trainer::sgd_step(const std::vector<std::vector<double>>& backbone_grads, const Gradients& head_grads,
                       double lr) {
  std::size_t slot = 0;
  auto update = [&](std::span<double> param, const std::vector<double>& grad) {
    auto& vel = velocity_[slot++];
    for (std::size_t k = 0; k < param.size(); ++k) {
      vel[k] = config_.momentum * vel[k] + grad[k] + config_.weight_decay * param[k];
      param[k] -= lr * vel[k];
    }
  };
  const auto bparams = backbone_.parameters();
  for (std::size_t i = 0; i < bparams.size(); ++i) update(bparams[i], backbone_grads[i]);
  const auto hparams = head_->parameters();
  for (std::size_t i = 0; i < hparams.size(); ++i) update(hparams[i], head_grads.params[i]);
}

std::pair<double, double> Trainer::evaluate() const {
  const Dataset& eval = data_.eval;
  if (eval.size() == 0) return {0.0, 0.0};
  double loss_sum = 0.0, hits = 0.0;
  std::vector<std::size_t> idx;
  Matrix x;
  std::vector<int> y;
  for (std::size_t start = 0; start < eval.size(); start += kEvalBatch) {
    const std::size_t stop = std::min(eval.size(), start + kEvalBatch);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    gather(eval, idx, x, y);
    try {
      const Matrix logits = head_->predict(backbone_.forward(x));
      loss_sum += cross_entropy(logits, y).loss * static_cast<double>(y.size());
      hits += accuracy(logits, y) * static_cast<double>(y.size());
    } catch (const ZeroNormInput&) {
      return {NAN, NAN};
    } catch (const DegenerateInput&) {
      return {NAN, NAN};
    }
  }
  const auto count = static_cast<double>(eval.size());
  return {loss_sum / count, hits / count};
}

const EpochRecord& Trainer::run_epoch() {
  if (done()) throw ConfigError("training run already finished");
  const auto epoch_start = Clock::now();
  EpochRecord rec;
  rec.epoch = log_.epochs.size();
  rec.lr = config_.lr_at(rec.epoch);

  const Dataset& train = data_.train;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_gen(derive_seed(derive_seed(config_.seed, kShuffleStream), rec.epoch));
  std::shuffle(order.begin(), order.end(), shuffle_gen);

  double loss_sum = 0.0, hits = 0.0;
  std::size_t seen = 0;
  Matrix x;
  std::vector<int> y;
  Mlp::Cache cache;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t stop = std::min(order.size(), start + config_.batch_size);
    gather(train, std::span(order).subspan(start, stop - start), x, y);
    double batch_loss = NAN;
    try {
      const Matrix features = backbone_.forward(x, &cache);
      const Matrix logits = head_->forward(features, y, iteration_);
      auto [loss, d_logits] = cross_entropy(logits, y);
      batch_loss = loss;
      if (!is_divergent_loss(loss)) {
        const Gradients head_grads = head_->backward(features, y, iteration_, d_logits);
        const auto backbone_grads = backbone_.backward(cache, head_grads.d_input);
        sgd_step(backbone_grads, head_grads, rec.lr);
        hits += accuracy(logits, y) * static_cast<double>(y.size());
      }
    } catch (const ZeroNormInput&) {
      // Collapsed features or head vectors: the run has left the regime where
      // normalized logits are defined.
      batch_loss = NAN;
    } catch (const DegenerateInput&) {
      batch_loss = NAN;
    }
    ++iteration_;
    if (is_divergent_loss(batch_loss)) {
      diverged_ = true;
      rec.train_loss = batch_loss;
      break;
    }
    loss_sum += batch_loss * static_cast<double>(y.size());
    seen += y.size();
  }
  rec.train_seconds = seconds_since(epoch_start);

  if (!diverged_) {
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_acc = hits / static_cast<double>(seen);
    std::tie(rec.eval_loss, rec.eval_acc) = evaluate();
    if (is_divergent_loss(rec.train_loss) || is_divergent_loss(rec.eval_loss)) diverged_ = true;
  } else {
    rec.train_acc = NAN;
    rec.eval_loss = NAN;
    rec.eval_acc = NAN;
  }

  rec.plane_delta_deg = NAN;
  rec.n1_step_deg = NAN;
  if (const auto* sym = as_symmetric(*head_); sym && last_basis_) {
    try {
      const PlaneBasis cur = sym->basis();
      rec.plane_delta_deg = plane_rotation_monitor(*last_basis_, cur);
      rec.n1_step_deg = rad_to_deg(angle_between(last_basis_->n1, cur.n1));
      last_basis_ = cur;
    } catch (const Error&) {
      last_basis_.reset();
    }
  }
  rec.seconds = seconds_since(epoch_start);

  log_.epochs.push_back(rec);
  log_.diverged = diverged_;
  if (std::isfinite(rec.eval_acc)) log_.best_eval_acc = std::max(log_.best_eval_acc, rec.eval_acc);
  return log_.epochs.back();
}

TrainedModel train_model(const TrainConfig& config, const DatasetPair& data) {
  Trainer trainer(config, data);
  while (!trainer.done()) trainer.run_epoch();
  return {trainer.log(), trainer.backbone(), trainer.head().clone()};
}

RunLog train(const TrainConfig& config, const DatasetPair& data) { return train_model(config, data).log; }

void write_runlog_csv(std::ostream& out, const RunLog& log) {
  out << "epoch,train_loss,train_acc,eval_loss,eval_acc,plane_delta_deg,seconds\n";
  for (const auto& e : log.epochs) {
    out << e.epoch << ',' << format_real(e.train_loss) << ',' << format_real(e.train_acc) << ','
        << format_real(e.eval_loss) << ',' << format_real(e.eval_acc) << ',' << format_real(e.plane_delta_deg) << ','
        << format_fixed(e.seconds, 6) << '\n';
  }
}

void write_monitor_csv(std::ostream& out, const RunLog& log) {
  out << "epoch,lr,plane_delta_deg,n1_step_deg\n";
  for (const auto& e : log.epochs)
    out << e.epoch << ',' << format_real(e.lr) << ',' << format_real(e.plane_delta_deg) << ','
        << format_real(e.n1_step_deg) << '\n';
}

std::vector<BenchRow> bench_epoch(const TrainConfig& base, const DatasetPair& data, std::size_t repeats,
                                  const std::vector<HeadSpec>& heads) {
  if (repeats < 3) throw ConfigError("bench needs at least 3 repeats");
  std::vector<std::unique_ptr<Trainer>> trainers;
  for (const auto& spec : heads) {
    TrainConfig cfg = base;
    cfg.head = spec;
    cfg.epochs = repeats + 1;
    // Timing only: keep the learning rate constant across timed epochs.
    cfg.lr_decay_fractions.clear();
    trainers.push_back(std::make_unique<Trainer>(cfg, data));
    trainers.back()->run_epoch();  // warm-up
  }
  std::vector<std::vector<double>> times(heads.size());
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t h = 0; h < heads.size(); ++h) {
      if (trainers[h]->done()) continue;
      times[h].push_back(trainers[h]->run_epoch().train_seconds);
    }
  }
  std::vector<BenchRow> rows;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    BenchRow row{heads[h].kind, NAN, NAN, times[h].size()};
    if (!times[h].empty()) {
      const double n = static_cast<double>(times[h].size());
      row.mean_sec = std::accumulate(times[h].begin(), times[h].end(), 0.0) / n;
      double ss = 0.0;
      for (double t : times[h]) ss += (t - row.mean_sec) * (t - row.mean_sec);
      row.std_sec = times[h].size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "kind,mean_sec,std_sec,repeats\n";
  for (const auto& r : rows)
    out << to_string(r.kind) << ',' << format_fixed(r.mean_sec, 6) << ',' << format_fixed(r.std_sec, 6) << ','
        << r.repeats << '\n';
}

}  // namespace symfs
