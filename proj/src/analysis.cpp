#include "symfs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "symfs/csv.hpp"
#include "symfs/error.hpp"

namespace symfs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kConstantSpread = 1e-14;

double rad_to_deg(double r) { return r * 180.0 / kPi; }

// Root of f on [a, b] given opposite signs at the ends.
double bisect(const std::function<double(double)>& f, double a, double b, double fa) {
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

// Smallest unsigned angular distance, radians in [0, pi].
double circular_distance(double a, double b) {
  const double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

// log S_i for one logit column. When z_i is the largest logit the value is
// -log1p(sum_{j != i} e^{z_j - z_i}), which keeps full relative precision
// even where S_i itself has rounded to exactly 1.
double log_softmax(std::span<const double> z, std::size_t i) {
  const double zmax = *std::max_element(z.begin(), z.end());
  if (z[i] == zmax) {
    double rest = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j)
      if (j != i) rest += std::exp(z[j] - z[i]);
    return -std::log1p(rest);
  }
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - zmax);
  return z[i] - zmax - std::log(denom);
}

struct PlanarLogits {
  std::vector<double> along_n1;
  std::vector<double> along_n2;
  double sigma = 1.0;

  double z(std::size_t j, double theta) const {
    return sigma * (along_n1[j] * std::cos(theta) + along_n2[j] * std::sin(theta));
  }
  double dz(std::size_t j, double theta) const {
    return sigma * (-along_n1[j] * std::sin(theta) + along_n2[j] * std::cos(theta));
  }
  std::size_t size() const { return along_n1.size(); }

  // d log S_i / d theta = sum_{j != i} S_j (z_i' - z_j'). Same sign as
  // dS_i/dtheta, and free of the cancellation in z_i' - sum_j S_j z_j' once
  // S_i rounds to 1.
  double log_softmax_derivative(std::size_t i, double theta) const {
    const std::size_t n = size();
    std::vector<double> zs(n);
    double zmax = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      zs[j] = z(j, theta);
      zmax = std::max(zmax, zs[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) denom += std::exp(zs[j] - zmax);
    const double dzi = dz(i, theta);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) acc += std::exp(zs[j] - zmax) / denom * (dzi - dz(j, theta));
    return acc;
  }

  double log_softmax(std::size_t i, double theta) const {
    std::vector<double> zs(size());
    for (std::size_t j = 0; j < size(); ++j) zs[j] = z(j, theta);
    return symfs::log_softmax(zs, i);
  }
};

PlanarLogits planar_logits(const WeightSet& ws, const PlaneBasis& basis, double sigma) {
  PlanarLogits p;
  p.sigma = sigma;
  for (const auto& w : ws.weights) {
    const auto [a, b] = plane_coordinates(w, basis);
    p.along_n1.push_back(a);
    p.along_n2.push_back(b);
  }
  return p;
}

void check_sweep_args(const WeightSet& ws, const PlaneBasis& basis, double resolution_deg, double sigma) {
  if (!(resolution_deg > 0.0 && resolution_deg <= 1.0))
    throw ConfigError("sweep resolution must be in (0, 1] degrees");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (ws.classes() < 2) throw ConfigError("weight set needs at least 2 classes");
  for (const auto& w : ws.weights) {
    if (w.dim() != basis.dim()) throw ConfigError("weight dimension differs from basis dimension");
    if (!w.all_finite()) throw ConfigError("weight set contains non-finite values");
  }
}

}  // namespace

PlanarWeights planar_form(std::span<const VectorD> weights, const PlaneBasis& basis) {
  PlanarWeights p;
  for (const auto& w : weights) {
    const auto [a, b] = plane_coordinates(w, basis);
    p.norms.push_back(std::hypot(a, b));
    p.angles.push_back(wrap_angle(std::atan2(b, a)));
  }
  return p;
}

WeightSet WeightSet::from_planar(std::vector<double> angles, std::vector<double> norms) {
  if (norms.empty()) norms.assign(angles.size(), 1.0);
  if (norms.size() != angles.size()) throw ConfigError("planar angles and norms differ in length");
  WeightSet ws;
  for (std::size_t j = 0; j < angles.size(); ++j) {
    angles[j] = wrap_angle(angles[j]);
    ws.weights.push_back(VectorD{norms[j] * std::cos(angles[j]), norms[j] * std::sin(angles[j])});
  }
  ws.planar = PlanarWeights{std::move(norms), std::move(angles)};
  return ws;
}

WeightSet WeightSet::from_layout(const SymmetricLayout& layout) {
  WeightSet ws;
  ws.weights = layout.weights;
  ws.planar = planar_form(layout.weights, layout.basis);
  return ws;
}

std::size_t sweep_samples(double resolution_deg) {
  return static_cast<std::size_t>(std::ceil(360.0 / resolution_deg - 1e-9));
}

SweepResult sweep(const WeightSet& ws, const PlaneBasis& basis, double resolution_deg, double sigma) {
  check_sweep_args(ws, basis, resolution_deg, sigma);
  const std::size_t n = ws.classes();
  const std::size_t samples = sweep_samples(resolution_deg);
  SweepResult out;
  out.thetas.resize(samples);
  out.logits = Matrix(n, samples);
  out.softmax = Matrix(n, samples);
  out.winner.resize(samples);

  for (std::size_t t = 0; t < samples; ++t) {
    const double theta = kTwoPi * static_cast<double>(t) / static_cast<double>(samples);
    out.thetas[t] = theta;
    const VectorD e = rotate_in_plane(basis, theta);
    double zmax = -INFINITY;
    std::size_t best = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double z = sigma * dot(ws.weights[j], e);
      out.logits(j, t) = z;
      if (z > zmax) {
        zmax = z;
        best = j;
      }
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) denom += std::exp(out.logits(j, t) - zmax);
    for (std::size_t j = 0; j < n; ++j) out.softmax(j, t) = std::exp(out.logits(j, t) - zmax) / denom;
    out.winner[t] = best;
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  const std::size_t n = result.classes();
  out << "theta_deg";
  for (std::size_t j = 0; j < n; ++j) out << ",z_" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",s_" << j;
  out << ",winner\n";
  for (std::size_t t = 0; t < result.samples(); ++t) {
    out << format_fixed(rad_to_deg(result.thetas[t]), 6);
    for (std::size_t j = 0; j < n; ++j) out << ',' << format_real(result.logits(j, t));
    for (std::size_t j = 0; j < n; ++j) out << ',' << format_real(result.softmax(j, t));
    out << ',' << result.winner[t] << '\n';
  }
}

double criterion_sum(const PlanarWeights& planar, double theta) {
  double acc = 0.0;
  for (std::size_t j = 0; j < planar.size(); ++j) {
    const double r = planar.norms[j];
    const double delta = theta - planar.angles[j];
    acc -= r * std::sin(delta) * std::exp(r * std::cos(delta));
  }
  return acc;
}

double lemma2_sum(std::size_t n, double x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double arg = x - kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    acc += std::sin(arg) * std::exp(std::cos(arg));
  }
  return acc;
}

LemmaReport verify_lemma2(std::size_t n, double tol) {
  if (n < 2) throw ConfigError("verify_lemma2 needs n >= 2");
  if (!(tol > 0.0)) throw ConfigError("verify_lemma2 needs a positive tolerance");
  LemmaReport report;
  for (std::size_t r = 0; r < n; ++r) {
    const double x = kTwoPi * static_cast<double>(r) / static_cast<double>(n);
    report.max_abs_residual = std::max(report.max_abs_residual, std::abs(lemma2_sum(n, x)));
  }
  report.passes = report.max_abs_residual <= tol;

  const std::size_t grid = std::max<std::size_t>(3600, 64 * n);
  const double h = kTwoPi / static_cast<double>(grid);
  const std::function<double(double)> f = [n](double x) { return lemma2_sum(n, x); };
  // Offset the grid by half a step so claimed roots never land on a sample.
  double prev_x = 0.5 * h, prev = f(prev_x);
  for (std::size_t k = 1; k <= grid; ++k) {
    const double x = (static_cast<double>(k) + 0.5) * h;
    const double v = f(x);
    if ((prev < 0.0) != (v < 0.0)) {
      const double root = bisect(f, prev_x, x, prev);
      const double spacing = kTwoPi / static_cast<double>(n);
      const double nearest = std::round(root / spacing) * spacing;
      if (std::abs(root - nearest) > 2.0 * h) report.extra_roots.push_back(wrap_angle(root));
    }
    prev_x = x;
    prev = v;
  }
  return report;
}

double refutability_value(std::size_t n) {
  if (n < 3) throw InvalidClassCount(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double a = kPi * static_cast<double>(j) / static_cast<double>(n);
    acc += std::sin(a) * std::exp(std::cos(a));
  }
  return acc;
}

std::vector<Extremum> find_extrema(std::span<const double> values, const std::function<double(double)>& derivative) {
  const std::size_t count = values.size();
  if (count < 3) throw NoExtremumFound("find_extrema needs at least 3 samples");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("find_extrema: non-finite sample");
  if (*hi - *lo <= kConstantSpread) throw NoExtremumFound("find_extrema: values are constant");

  const double h = kTwoPi / static_cast<double>(count);
  auto at = [&](std::ptrdiff_t k) {
    const auto m = static_cast<std::ptrdiff_t>(count);
    return values[static_cast<std::size_t>(((k % m) + m) % m)];
  };

  // Nonzero forward differences d_j = v[j+1] - v[j] around the circle.
  struct Step {
    std::ptrdiff_t index;
    bool rising;
  };
  std::vector<Step> steps;
  for (std::size_t j = 0; j < count; ++j) {
    const double d = at(static_cast<std::ptrdiff_t>(j) + 1) - values[j];
    if (d != 0.0) steps.push_back({static_cast<std::ptrdiff_t>(j), d > 0.0});
  }

  std::vector<Extremum> out;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const Step a = steps[s];
    Step b = steps[(s + 1) % steps.size()];
    if (a.rising == b.rising) continue;
    if (b.index <= a.index) b.index += static_cast<std::ptrdiff_t>(count);
    const bool is_max = a.rising;
    // Samples a.index+1 .. b.index form the (possibly flat) discrete peak.
    const std::ptrdiff_t center = (a.index + 1 + b.index) / 2;
    const double left = static_cast<double>(a.index) * h;
    const double right = static_cast<double>(b.index + 1) * h;

    double theta = static_cast<double>(center) * h;
    bool refined = false;
    if (derivative) {
      const double fl = derivative(left), fr = derivative(right);
      if ((fl > 0.0) == is_max && (fr < 0.0) == is_max && fl != 0.0 && fr != 0.0) {
        theta = bisect(derivative, left, right, fl);
        refined = true;
      }
    }
    if (!refined) {
      const double ym = at(center - 1), y0 = at(center), yp = at(center + 1);
      const double curvature = ym - 2.0 * y0 + yp;
      if (curvature != 0.0) {
        const double offset = 0.5 * (ym - yp) / curvature;
        if (std::abs(offset) <= 1.0) theta += offset * h;
      }
    }
    out.push_back({wrap_angle(theta), is_max});
  }
  if (out.empty()) throw NoExtremumFound("find_extrema: no sign change in the discrete derivative");
  std::sort(out.begin(), out.end(), [](const Extremum& x, const Extremum& y) { return x.theta < y.theta; });
  return out;
}

std::vector<ClassDivergence> extremum_divergence(const WeightSet& ws, const PlaneBasis& basis, double sigma,
                                                 double resolution_deg) {
  const SweepResult sw = sweep(ws, basis, resolution_deg, sigma);
  const PlanarLogits p = planar_logits(ws, basis, sigma);
  std::vector<ClassDivergence> out;
  for (std::size_t i = 0; i < ws.classes(); ++i) {
    const auto dot_ext = find_extrema(sw.logits.row(i), [&](double th) { return p.dz(i, th); });
    // Peaks of S_i are located on log S_i: at large sigma S_i is flat at
    // exactly 1.0 across a band of angles, while its logarithm still resolves
    // the maximum.
    std::vector<double> log_row(sw.samples());
    std::vector<double> column(ws.classes());
    for (std::size_t t = 0; t < sw.samples(); ++t) {
      for (std::size_t j = 0; j < ws.classes(); ++j) column[j] = sw.logits(j, t);
      log_row[t] = log_softmax(column, i);
    }
    const auto soft_ext = find_extrema(log_row, [&](double th) { return p.log_softmax_derivative(i, th); });

    // Global softmax maximum: evaluate the refined candidates exactly.
    double best_val = -INFINITY, soft_peak = 0.0;
    for (const auto& e : soft_ext) {
      if (!e.is_max) continue;
      const double s = p.log_softmax(i, e.theta);
      if (s > best_val) {
        best_val = s;
        soft_peak = e.theta;
      }
    }
    double best_dist = INFINITY, dot_peak = 0.0;
    for (const auto& e : dot_ext) {
      if (!e.is_max) continue;
      const double dist = circular_distance(e.theta, soft_peak);
      if (dist < best_dist || (dist == best_dist && e.theta < dot_peak)) {
        best_dist = dist;
        dot_peak = e.theta;
      }
    }
    if (!std::isfinite(best_val) || !std::isfinite(best_dist))
      throw NoExtremumFound("extremum_divergence: class has no maximum");
    out.push_back({rad_to_deg(dot_peak), rad_to_deg(soft_peak), rad_to_deg(best_dist)});
  }
  return out;
}

double astride_residual(std::span<const VectorD> weights, std::size_t i, const VectorD& plane_seed) {
  if (i >= weights.size()) throw ConfigError("astride check: class index out of range");
  const PlaneBasis plane = gram_schmidt(weights[i], plane_seed);
  const PlanarWeights planar = planar_form(weights, plane);
  return std::abs(criterion_sum(planar, planar.angles[i]));
}

double astride_cancellation_check(const SymmetricLayout& layout, std::size_t i, const VectorD& plane_seed) {
  return astride_residual(layout.weights, i, plane_seed);
}

}  // namespace symfs
