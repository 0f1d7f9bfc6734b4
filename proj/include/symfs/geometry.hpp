#pragma once

// Plane construction and rotation primitives for symmetric class layouts.
//
// A symmetric layout places n unit weight vectors on a single 2-plane of
// R^d at equal angular spacing 2*pi/n. Everything here is a pure function of
// its inputs.

#include <cstddef>
#include <vector>

#include "symfs/linalg.hpp"

namespace symfs {

inline constexpr double kDegenerateNorm = 1e-9;

/// Ordered orthonormal pair spanning a 2-plane.
struct PlaneBasis {
  VectorD n1;
  VectorD n2;

  std::size_t dim() const { return n1.dim(); }
};

struct SymmetricLayout {
  std::vector<VectorD> weights;
  PlaneBasis basis;

  std::size_t classes() const { return weights.size(); }
  std::size_t dim() const { return basis.dim(); }
};

/// Orthonormalizes (v1, v2): n1 = v1/|v1|, n2 = unit residual of v2 against n1.
/// Throws DegenerateInput when |v1| or the residual is at most kDegenerateNorm.
PlaneBasis gram_schmidt(const VectorD& v1, const VectorD& v2);

/// cos(theta) n1 + sin(theta) n2.
VectorD rotate_in_plane(const PlaneBasis& basis, double theta);

/// The basis turned by theta inside its own plane; spans the same plane.
PlaneBasis rotate_basis(const PlaneBasis& basis, double theta);

/// weights[i] = rotate_in_plane(basis, 2*pi*i/n). Throws InvalidClassCount for n < 3.
SymmetricLayout build_symmetric_layout(const PlaneBasis& basis, std::size_t n);

/// (v.n1) n1 + (v.n2) n2
VectorD project_onto_plane(const VectorD& v, const PlaneBasis& basis);

/// In-plane coordinates (v.n1, v.n2).
struct PlaneCoords {
  double along_n1;
  double along_n2;
};
PlaneCoords plane_coordinates(const VectorD& v, const PlaneBasis& basis);

/// Unsigned angle in [0, pi] between two nonzero vectors. Uses the
/// half-chord form 2*atan2(|a^ - b^|, |a^ + b^|), which stays accurate near 0
/// and pi where a clamped arccos loses about 1e-8 rad.
double angle_between(const VectorD& a, const VectorD& b);

/// Wraps an angle into [0, 2*pi).
double wrap_angle(double theta);

struct LayoutCheck {
  double max_norm_error = 0.0;       // max |‖w_i‖ - 1|
  double max_spacing_error = 0.0;    // max |angle(w_i, w_{i+1}) - 2pi/n|
  double max_plane_residual = 0.0;   // max ‖w_i - proj_P(w_i)‖
  double sum_norm = 0.0;             // ‖Σ w_i‖
  double basis_norm_error = 0.0;     // max |‖n_k‖ - 1|
  double basis_dot = 0.0;            // |n1 . n2|

  bool passes() const;
};

/// Measures the invariants of a symmetric layout against their tolerances.
LayoutCheck check_layout(const SymmetricLayout& layout);

struct RhombusReport {
  double norm_a_par = 0.0;
  double norm_b_par = 0.0;
  double angle_a_s = 0.0;
  double angle_b_s = 0.0;
  bool passes = false;

  double residual() const;
};

/// For unit a, b and a plane through s = a + b, checks that the projections of
/// a and b onto the plane have equal norms and equal angles to s.
/// Throws PlaneMissesSum when s is not in span(basis) to 1e-9.
RhombusReport verify_lemma3(const VectorD& a, const VectorD& b, const PlaneBasis& basis);

}  // namespace symfs
