#include "symfs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "symfs/error.hpp"

namespace symfs {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kSpacingTol = 1e-10;
constexpr double kSumTol = 1e-10;
constexpr double kLemma3Tol = 1e-9;

void require_same_dim(const VectorD& a, const VectorD& b, const char* what) {
  if (a.dim() != b.dim()) throw ConfigError(std::string(what) + ": dimension mismatch");
}

}  // namespace

PlaneBasis gram_schmidt(const VectorD& v1, const VectorD& v2) {
  require_same_dim(v1, v2, "gram_schmidt");
  if (v1.dim() < 2) throw ConfigError("gram_schmidt: dimension must be at least 2");
  const double len1 = norm(v1);
  if (!(len1 > kDegenerateNorm)) throw DegenerateInput("gram_schmidt: first vector has (near) zero norm");
  VectorD n1 = (1.0 / len1) * v1;

  VectorD residual = v2;
  axpy(-dot(n1, v2), n1.span(), residual.span());
  const double len2 = norm(residual);
  if (!(len2 > kDegenerateNorm)) throw DegenerateInput("gram_schmidt: vectors are collinear");
  // Second pass restores orthogonality lost to cancellation when v2 is
  // nearly parallel to v1.
  axpy(-dot(n1, residual), n1.span(), residual.span());
  residual *= 1.0 / norm(residual);
  return {std::move(n1), std::move(residual)};
}

VectorD rotate_in_plane(const PlaneBasis& basis, double theta) {
  if (theta == 0.0) return basis.n1;
  VectorD out = std::cos(theta) * basis.n1;
  axpy(std::sin(theta), basis.n2.span(), out.span());
  return out;
}

PlaneBasis rotate_basis(const PlaneBasis& basis, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  VectorD n1 = c * basis.n1;
  axpy(s, basis.n2.span(), n1.span());
  VectorD n2 = c * basis.n2;
  axpy(-s, basis.n1.span(), n2.span());
  return {std::move(n1), std::move(n2)};
}

SymmetricLayout build_symmetric_layout(const PlaneBasis& basis, std::size_t n) {
  if (n < 3) throw InvalidClassCount(n);
  SymmetricLayout layout;
  layout.basis = basis;
  layout.weights.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    layout.weights.push_back(rotate_in_plane(basis, theta));
  }
  return layout;
}

PlaneCoords plane_coordinates(const VectorD& v, const PlaneBasis& basis) {
  require_same_dim(v, basis.n1, "plane_coordinates");
  return {dot(v, basis.n1), dot(v, basis.n2)};
}

VectorD project_onto_plane(const VectorD& v, const PlaneBasis& basis) {
  const auto [a, b] = plane_coordinates(v, basis);
  VectorD out = a * basis.n1;
  axpy(b, basis.n2.span(), out.span());
  return out;
}

double angle_between(const VectorD& a, const VectorD& b) {
  require_same_dim(a, b, "angle_between");
  const double la = norm(a), lb = norm(b);
  if (la == 0.0 || lb == 0.0) throw DegenerateInput("angle_between: zero vector");
  double diff = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double ua = a[i] / la, ub = b[i] / lb;
    diff += (ua - ub) * (ua - ub);
    sum += (ua + ub) * (ua + ub);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

bool LayoutCheck::passes() const {
  return max_norm_error <= kUnitTol && max_spacing_error <= kSpacingTol &&
         max_plane_residual <= kUnitTol && sum_norm <= kSumTol && basis_norm_error <= kUnitTol &&
         basis_dot <= kUnitTol;
}

LayoutCheck check_layout(const SymmetricLayout& layout) {
  LayoutCheck check;
  const auto& basis = layout.basis;
  check.basis_norm_error = std::max(std::abs(norm(basis.n1) - 1.0), std::abs(norm(basis.n2) - 1.0));
  check.basis_dot = std::abs(dot(basis.n1, basis.n2));

  const std::size_t n = layout.classes();
  const double spacing = 2.0 * std::numbers::pi / static_cast<double>(n);
  VectorD total(layout.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const VectorD& w = layout.weights[i];
    check.max_norm_error = std::max(check.max_norm_error, std::abs(norm(w) - 1.0));
    check.max_plane_residual = std::max(check.max_plane_residual, norm(w - project_onto_plane(w, basis)));
    // Adjacent spacing 2pi/n exceeds pi only for n < 3, which layouts reject;
    // the unsigned angle is therefore the signed step.
    const double step = angle_between(w, layout.weights[(i + 1) % n]);
    check.max_spacing_error = std::max(check.max_spacing_error, std::abs(step - spacing));
    total += w;
  }
  check.sum_norm = norm(total);
  return check;
}

double RhombusReport::residual() const {
  return std::max(std::abs(norm_a_par - norm_b_par), std::abs(angle_a_s - angle_b_s));
}

RhombusReport verify_lemma3(const VectorD& a, const VectorD& b, const PlaneBasis& basis) {
  require_same_dim(a, b, "verify_lemma3");
  require_same_dim(a, basis.n1, "verify_lemma3");
  if (std::abs(norm(a) - 1.0) > kLemma3Tol || std::abs(norm(b) - 1.0) > kLemma3Tol)
    throw ConfigError("verify_lemma3: a and b must be unit vectors");
  const VectorD s = a + b;
  if (!(norm(s) > kDegenerateNorm)) throw DegenerateInput("verify_lemma3: a + b vanishes");
  if (norm(s - project_onto_plane(s, basis)) > kLemma3Tol)
    throw PlaneMissesSum("verify_lemma3: plane does not contain a + b");

  const VectorD a_par = project_onto_plane(a, basis);
  const VectorD b_par = project_onto_plane(b, basis);
  RhombusReport report;
  report.norm_a_par = norm(a_par);
  report.norm_b_par = norm(b_par);
  report.angle_a_s = angle_between(a_par, s);
  report.angle_b_s = angle_between(b_par, s);
  report.passes = report.residual() <= kLemma3Tol;
  return report;
}

}  // namespace symfs
