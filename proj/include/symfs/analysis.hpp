#pragma once

// Softmax geometry along an angular sweep of the embedding.
//
// For weight vectors w_j and an embedding e(theta) turning inside a plane, the
// logits are z_j = sigma * (w_j . e). A class's softmax output S_i peaks where
// the criterion sum  sum_j (dz_j/dtheta) e^{z_j}  vanishes; this module
// evaluates that sum, verifies its claimed roots for symmetric layouts, and
// measures how far softmax peaks drift from dot-product peaks otherwise.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "symfs/geometry.hpp"
#include "symfs/linalg.hpp"

namespace symfs {

/// Weight j restricted to an analysis plane: z_j(theta) = norm_j cos(theta - angle_j).
struct PlanarWeights {
  std::vector<double> norms;
  std::vector<double> angles;  // radians, [0, 2pi)

  std::size_t size() const { return norms.size(); }
};

/// Planar norms/angles of arbitrary vectors as seen from `basis`.
PlanarWeights planar_form(std::span<const VectorD> weights, const PlaneBasis& basis);

struct WeightSet {
  std::vector<VectorD> weights;
  std::optional<PlanarWeights> planar;

  std::size_t classes() const { return weights.size(); }

  /// Vectors in R^2 at the given planar angles (radians); unit norms when
  /// `norms` is empty.
  static WeightSet from_planar(std::vector<double> angles, std::vector<double> norms = {});
  static WeightSet from_layout(const SymmetricLayout& layout);
};

struct SweepResult {
  std::vector<double> thetas;  // radians
  Matrix logits;               // classes × samples
  Matrix softmax;              // classes × samples
  std::vector<std::size_t> winner;

  std::size_t classes() const { return logits.rows; }
  std::size_t samples() const { return thetas.size(); }
};

inline constexpr double kDefaultResolutionDeg = 0.1;

/// Number of uniform samples covering [0, 2pi) at no coarser than `resolution_deg`.
std::size_t sweep_samples(double resolution_deg);

SweepResult sweep(const WeightSet& ws, const PlaneBasis& basis, double resolution_deg, double sigma);

/// CSV: theta_deg,z_0..z_{n-1},s_0..s_{n-1},winner
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// sum_j (dz_j/dtheta) e^{z_j} = -sum_j r_j sin(theta - phi_j) e^{r_j cos(theta - phi_j)}.
/// At theta = phi_i the slope of S_i is -S_i * sum / sum_j e^{z_j}, so a
/// positive value means S_i is decreasing there. Only the zero set matters.
double criterion_sum(const PlanarWeights& planar, double theta);

/// sum_{k<n} sin(x - 2k pi/n) e^{cos(x - 2k pi/n)}
double lemma2_sum(std::size_t n, double x);

struct LemmaReport {
  double max_abs_residual = 0.0;
  bool passes = false;
  // Sign changes of lemma2_sum found on a dense sweep away from the claimed
  // roots 2r pi/n. Reported for information only.
  std::vector<double> extra_roots;
};

/// Evaluates lemma2_sum at x_r = 2r pi/n for r in [0, n).
LemmaReport verify_lemma2(std::size_t n, double tol);

/// sum_{j<n} sin(j pi/n) e^{cos(j pi/n)}: the criterion for the half-fan
/// layout with spacing pi/n, evaluated at the reference weight. Throws
/// InvalidClassCount for n < 3.
double refutability_value(std::size_t n);

struct Extremum {
  double theta = 0.0;  // radians, [0, 2pi)
  bool is_max = false;
};

/// Local extrema of samples on the uniform circular grid theta_k = 2 pi k / T.
/// Brackets come from sign changes of the forward difference; each bracket is
/// refined by bisection on `derivative` when given and sign-consistent, else
/// by a parabola through the three samples around the discrete peak.
/// Throws NoExtremumFound for constant input (spread <= 1e-14).
std::vector<Extremum> find_extrema(std::span<const double> values,
                                   const std::function<double(double)>& derivative = {});

struct ClassDivergence {
  double dot_peak_deg = 0.0;
  double softmax_peak_deg = 0.0;
  double divergence_deg = 0.0;  // wrapped into [0, 180]
};

/// Per class: distance between the global softmax maximum and the nearest
/// dot-product maximum of the same class.
std::vector<ClassDivergence> extremum_divergence(const WeightSet& ws, const PlaneBasis& basis, double sigma,
                                                 double resolution_deg = kDefaultResolutionDeg);

/// Projects the layout onto the plane span{w_i, plane_seed} and evaluates the
/// criterion sum there at the angle of w_i. Returns |sum|.
double astride_cancellation_check(const SymmetricLayout& layout, std::size_t i, const VectorD& plane_seed);

/// Same evaluation for arbitrary weights (no symmetry assumed).
double astride_residual(std::span<const VectorD> weights, std::size_t i, const VectorD& plane_seed);

}  // namespace symfs
