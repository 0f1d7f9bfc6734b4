#include "symfs/head.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "symfs/error.hpp"
#include "symfs/rng.hpp"

namespace symfs {

namespace {

constexpr double kZeroInputNorm = 1e-12;

// Row norms of x; throws ZeroNormInput on a (near) zero row.
std::vector<double> input_norms(const Matrix& x) {
  std::vector<double> norms(x.rows);
  for (std::size_t b = 0; b < x.rows; ++b) {
    norms[b] = norm(x.row(b));
    if (!(norms[b] >= kZeroInputNorm)) throw ZeroNormInput(b);
  }
  return norms;
}

Matrix normalize_rows(const Matrix& m, std::span<const double> norms) {
  Matrix out = m;
  for (std::size_t r = 0; r < m.rows; ++r)
    for (double& v : out.row(r)) v /= norms[r];
  return out;
}

std::vector<double> weight_norms(const Matrix& w) {
  std::vector<double> norms(w.rows);
  for (std::size_t j = 0; j < w.rows; ++j) {
    norms[j] = norm(w.row(j));
    if (!(norms[j] > 0.0)) throw DegenerateInput("class weight row " + std::to_string(j) + " has zero norm");
  }
  return norms;
}

// Maps a gradient w.r.t. a normalized row u = v/|v| back to v:
// (g - u (u.g)) / |v|, in place.
void backprop_normalize(std::span<double> grad, std::span<const double> unit, double len) {
  const double along = dot(unit, grad);
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = (grad[k] - unit[k] * along) / len;
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows) throw ConfigError("label count differs from batch size");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw ConfigError("label out of range");
}

void check_input(const Matrix& x, std::size_t d) {
  if (x.cols != d) throw ConfigError("input width differs from head input dimension");
}

void check_upstream(const Matrix& upstream, std::size_t rows, std::size_t classes) {
  if (upstream.rows != rows || upstream.cols != classes) throw ConfigError("upstream gradient shape mismatch");
}

// Chebyshev T_m(c) and its derivative m U_{m-1}(c).
std::pair<double, double> chebyshev(int m, double c) {
  double t_prev = 1.0, t = c;      // T_0, T_1
  double u_prev = 0.0, u = 1.0;    // U_{-1}, U_0
  if (m == 0) return {1.0, 0.0};
  for (int k = 1; k < m; ++k) {
    const double t_next = 2.0 * c * t - t_prev;
    const double u_next = 2.0 * c * u - u_prev;
    t_prev = t;
    t = t_next;
    u_prev = u;
    u = u_next;
  }
  return {t, static_cast<double>(m) * u};
}

// Segment index k with theta in [k pi/m, (k+1) pi/m].
int psi_segment(double theta, int m) {
  const int k = static_cast<int>(std::floor(theta * m / std::numbers::pi));
  return std::clamp(k, 0, m - 1);
}

// psi as a function of c = cos(theta), with d psi / dc.
std::pair<double, double> psi_of_cos(double c, int m) {
  const double theta = std::acos(std::clamp(c, -1.0, 1.0));
  const int k = psi_segment(theta, m);
  const auto [tm, dtm] = chebyshev(m, c);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return {sign * tm - 2.0 * k, sign * dtm};
}

}  // namespace

std::string_view to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::Symmetric: return "symmetric";
    case HeadKind::FC: return "fc";
    case HeadKind::ArcFace: return "arcface";
    case HeadKind::SphereFace: return "sphereface";
  }
  return "unknown";
}

HeadKind parse_head_kind(std::string_view name) {
  if (name == "symmetric") return HeadKind::Symmetric;
  if (name == "fc") return HeadKind::FC;
  if (name == "arcface") return HeadKind::ArcFace;
  if (name == "sphereface") return HeadKind::SphereFace;
  throw ConfigError("unknown head kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- symmetric

SymmetricalHead::SymmetricalHead(VectorD v1_, VectorD v2_, double sigma, std::size_t n)
    : v1(std::move(v1_)), v2(std::move(v2_)), sigma_(sigma), n_(n) {
  if (n_ < 3) throw InvalidClassCount(n_);
  if (!(sigma_ > 0.0)) throw ConfigError("sigma must be positive");
  if (v1.dim() != v2.dim() || v1.dim() < 2) throw ConfigError("v1 and v2 must share a dimension >= 2");
}

Matrix SymmetricalHead::forward(const Matrix& x, std::span<const int>, std::size_t) const {
  return forward_symmetric(*this, x);
}

Matrix SymmetricalHead::predict(const Matrix& x) const { return forward_symmetric(*this, x); }

Gradients SymmetricalHead::backward(const Matrix& x, std::span<const int>, std::size_t,
                                    const Matrix& upstream) const {
  return backward_symmetric(*this, x, upstream);
}

namespace {

Matrix layout_matrix(const SymmetricLayout& layout) {
  Matrix w(layout.classes(), layout.dim());
  for (std::size_t i = 0; i < layout.classes(); ++i) std::ranges::copy(layout.weights[i], w.row(i).begin());
  return w;
}

}  // namespace

Matrix forward_symmetric(const SymmetricalHead& head, const Matrix& x) {
  check_input(x, head.input_dim());
  const Matrix w = layout_matrix(head.layout());
  const auto norms = input_norms(x);
  Matrix logits = matmul_transposed(normalize_rows(x, norms), w);
  for (double& v : logits.data) v *= head.sigma();
  return logits;
}

Gradients backward_symmetric(const SymmetricalHead& head, const Matrix& x, const Matrix& upstream) {
  check_input(x, head.input_dim());
  const std::size_t n = head.classes();
  check_upstream(upstream, x.rows, n);
  const double sigma = head.sigma();

  const VectorD& v1 = head.v1;
  const VectorD& v2 = head.v2;
  const PlaneBasis basis = head.basis();
  const VectorD& u1 = basis.n1;
  const VectorD& u2 = basis.n2;
  const double len1 = norm(v1);
  const double proj = dot(u1, v2);
  VectorD residual = v2;
  axpy(-proj, u1.span(), residual.span());
  const double len_r = norm(residual);

  const Matrix w = layout_matrix(build_symmetric_layout(basis, n));
  const auto xnorms = input_norms(x);
  const Matrix xhat = normalize_rows(x, xnorms);

  // dL/dw_i = sigma * sum_b G[b,i] xhat_b
  Matrix gw = matmul_lhs_transposed(upstream, xhat);
  for (double& v : gw.data) v *= sigma;

  // w_i = cos(a_i) u1 + sin(a_i) u2
  VectorD g1(u1.dim()), g2(u1.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    axpy(std::cos(a), gw.row(i), g1.span());
    axpy(std::sin(a), gw.row(i), g2.span());
  }

  // u2 = r / |r|
  VectorD g_r = g2;
  backprop_normalize(g_r.span(), u2.span(), len_r);
  // r = v2 - (u1.v2) u1
  const double u1_gr = dot(u1, g_r);
  VectorD d_v2 = g_r;
  axpy(-u1_gr, u1.span(), d_v2.span());
  VectorD g_u1 = g1;
  axpy(-proj, g_r.span(), g_u1.span());
  axpy(-u1_gr, v2.span(), g_u1.span());
  // u1 = v1 / |v1|
  VectorD d_v1 = g_u1;
  backprop_normalize(d_v1.span(), u1.span(), len1);

  Gradients grads;
  grads.params = {d_v1.values(), d_v2.values()};
  grads.d_input = matmul(upstream, w);
  for (std::size_t b = 0; b < x.rows; ++b) {
    auto row = grads.d_input.row(b);
    for (double& v : row) v *= sigma;
    backprop_normalize(row, xhat.row(b), xnorms[b]);
  }
  return grads;
}

// ---------------------------------------------------------------------- FC

FcHead::FcHead(Matrix weight_, std::vector<double> bias_) : weight(std::move(weight_)), bias(std::move(bias_)) {
  if (bias.size() != weight.rows) throw ConfigError("FC bias length differs from class count");
}

Matrix FcHead::predict(const Matrix& x) const { return forward_fc(weight, bias, x); }

Gradients FcHead::backward(const Matrix& x, std::span<const int>, std::size_t, const Matrix& upstream) const {
  return backward_fc(weight, x, upstream);
}

Matrix forward_fc(const Matrix& weight, std::span<const double> bias, const Matrix& x) {
  check_input(x, weight.cols);
  if (bias.size() != weight.rows) throw ConfigError("FC bias length differs from class count");
  Matrix logits = matmul_transposed(x, weight);
  for (std::size_t b = 0; b < logits.rows; ++b)
    for (std::size_t j = 0; j < logits.cols; ++j) logits(b, j) += bias[j];
  return logits;
}

Gradients backward_fc(const Matrix& weight, const Matrix& x, const Matrix& upstream) {
  check_input(x, weight.cols);
  check_upstream(upstream, x.rows, weight.rows);
  Gradients grads;
  grads.params.push_back(matmul_lhs_transposed(upstream, x).data);
  std::vector<double> d_bias(weight.rows, 0.0);
  for (std::size_t b = 0; b < upstream.rows; ++b) axpy(1.0, upstream.row(b), d_bias);
  grads.params.push_back(std::move(d_bias));
  grads.d_input = matmul(upstream, weight);
  return grads;
}

// ------------------------------------------------------------------ ArcFace

ArcFaceHead::ArcFaceHead(Matrix weight_, double sigma, double margin)
    : weight(std::move(weight_)), sigma_(sigma), margin_(margin) {
  if (!(sigma_ > 0.0)) throw ConfigError("sigma must be positive");
  if (!(margin_ >= 0.0)) throw ConfigError("ArcFace margin must be non-negative");
}

Matrix ArcFaceHead::forward(const Matrix& x, std::span<const int> labels, std::size_t) const {
  return forward_arcface(weight, x, labels, sigma_, margin_);
}

Matrix ArcFaceHead::predict(const Matrix& x) const {
  check_input(x, weight.cols);
  const auto wn = weight_norms(weight);
  const auto xn = input_norms(x);
  Matrix logits = matmul_transposed(normalize_rows(x, xn), normalize_rows(weight, wn));
  for (double& v : logits.data) v *= sigma_;
  return logits;
}

Gradients ArcFaceHead::backward(const Matrix& x, std::span<const int> labels, std::size_t,
                                const Matrix& upstream) const {
  return backward_arcface(weight, x, labels, sigma_, margin_, upstream);
}

namespace {

struct CosineTerms {
  std::vector<double> xnorms, wnorms;
  Matrix xhat, what, cosine;
};

CosineTerms cosine_terms(const Matrix& weight, const Matrix& x) {
  CosineTerms t;
  t.xnorms = input_norms(x);
  t.wnorms = weight_norms(weight);
  t.xhat = normalize_rows(x, t.xnorms);
  t.what = normalize_rows(weight, t.wnorms);
  t.cosine = matmul_transposed(t.xhat, t.what);
  return t;
}

// Given dL/dcos (batch × classes), accumulates gradients for W and x through
// the row normalizations.
Gradients backprop_cosine(const CosineTerms& t, const Matrix& g_cos) {
  Matrix g_what = matmul_lhs_transposed(g_cos, t.xhat);
  for (std::size_t j = 0; j < g_what.rows; ++j) backprop_normalize(g_what.row(j), t.what.row(j), t.wnorms[j]);
  Matrix g_xhat = matmul(g_cos, t.what);
  for (std::size_t b = 0; b < g_xhat.rows; ++b) backprop_normalize(g_xhat.row(b), t.xhat.row(b), t.xnorms[b]);
  Gradients grads;
  grads.params.push_back(std::move(g_what.data));
  grads.d_input = std::move(g_xhat);
  return grads;
}

}  // namespace

Matrix forward_arcface(const Matrix& weight, const Matrix& x, std::span<const int> labels, double sigma,
                       double margin) {
  check_input(x, weight.cols);
  check_labels(labels, x.rows, weight.rows);
  const CosineTerms t = cosine_terms(weight, x);
  Matrix logits = t.cosine;
  for (std::size_t b = 0; b < x.rows; ++b) {
    const auto y = static_cast<std::size_t>(labels[b]);
    const double theta = std::acos(std::clamp(t.cosine(b, y), -1.0, 1.0));
    if (theta + margin <= std::numbers::pi) logits(b, y) = std::cos(theta + margin);
  }
  for (double& v : logits.data) v *= sigma;
  return logits;
}

Gradients backward_arcface(const Matrix& weight, const Matrix& x, std::span<const int> labels, double sigma,
                           double margin, const Matrix& upstream) {
  check_input(x, weight.cols);
  check_labels(labels, x.rows, weight.rows);
  check_upstream(upstream, x.rows, weight.rows);
  const CosineTerms t = cosine_terms(weight, x);
  Matrix g_cos = upstream;
  for (double& v : g_cos.data) v *= sigma;
  for (std::size_t b = 0; b < x.rows; ++b) {
    const auto y = static_cast<std::size_t>(labels[b]);
    const double c = std::clamp(t.cosine(b, y), -1.0, 1.0);
    const double theta = std::acos(c);
    if (theta + margin <= std::numbers::pi) {
      // d cos(theta + m) / d cos(theta) = sin(theta + m) / sin(theta)
      const double s = std::max(std::sin(theta), 1e-12);
      g_cos(b, y) *= std::sin(theta + margin) / s;
    }
  }
  return backprop_cosine(t, g_cos);
}

// --------------------------------------------------------------- SphereFace

double SphereFaceAnneal::lambda_at(std::size_t iteration) const {
  return std::max(lambda_min, lambda0 / (1.0 + decay * static_cast<double>(iteration)));
}

SphereFaceHead::SphereFaceHead(Matrix weight_, int margin, SphereFaceAnneal anneal)
    : weight(std::move(weight_)), margin_(margin), anneal_(anneal) {
  if (margin_ < 1) throw ConfigError("SphereFace margin must be a positive integer");
  if (!(anneal_.lambda_min >= 0.0) || !(anneal_.lambda0 >= 0.0)) throw ConfigError("anneal lambda must be >= 0");
}

Matrix SphereFaceHead::forward(const Matrix& x, std::span<const int> labels, std::size_t iteration) const {
  return forward_sphereface(weight, x, labels, margin_, anneal_.lambda_at(iteration));
}

Matrix SphereFaceHead::predict(const Matrix& x) const {
  check_input(x, weight.cols);
  const auto wn = weight_norms(weight);
  return matmul_transposed(x, normalize_rows(weight, wn));
}

Gradients SphereFaceHead::backward(const Matrix& x, std::span<const int> labels, std::size_t iteration,
                                   const Matrix& upstream) const {
  return backward_sphereface(weight, x, labels, margin_, anneal_.lambda_at(iteration), upstream);
}

double sphereface_psi(double theta, int margin) {
  if (margin < 1) throw ConfigError("SphereFace margin must be a positive integer");
  const int k = psi_segment(theta, margin);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * std::cos(margin * theta) - 2.0 * k;
}

Matrix forward_sphereface(const Matrix& weight, const Matrix& x, std::span<const int> labels, int margin,
                          double lambda) {
  if (margin < 1) throw ConfigError("SphereFace margin must be a positive integer");
  if (!(lambda >= 0.0)) throw ConfigError("anneal lambda must be >= 0");
  check_input(x, weight.cols);
  check_labels(labels, x.rows, weight.rows);
  const CosineTerms t = cosine_terms(weight, x);
  Matrix logits(x.rows, weight.rows);
  for (std::size_t b = 0; b < x.rows; ++b) {
    const auto y = static_cast<std::size_t>(labels[b]);
    for (std::size_t j = 0; j < weight.rows; ++j) {
      const double c = t.cosine(b, j);
      double f = c;
      if (j == y) f = (lambda * c + psi_of_cos(c, margin).first) / (1.0 + lambda);
      logits(b, j) = t.xnorms[b] * f;
    }
  }
  return logits;
}

Gradients backward_sphereface(const Matrix& weight, const Matrix& x, std::span<const int> labels, int margin,
                              double lambda, const Matrix& upstream) {
  if (margin < 1) throw ConfigError("SphereFace margin must be a positive integer");
  check_input(x, weight.cols);
  check_labels(labels, x.rows, weight.rows);
  check_upstream(upstream, x.rows, weight.rows);
  const CosineTerms t = cosine_terms(weight, x);
  const std::size_t d = weight.cols;

  // logit = |x| f(c), c = what . x / |x|
  //   d/dx    = f(c) xhat + f'(c) (what - c xhat)
  //   d/dwhat = f'(c) x
  Matrix d_input(x.rows, d);
  Matrix g_what(weight.rows, d);
  for (std::size_t b = 0; b < x.rows; ++b) {
    const auto y = static_cast<std::size_t>(labels[b]);
    auto dx = d_input.row(b);
    for (std::size_t j = 0; j < weight.rows; ++j) {
      const double g = upstream(b, j);
      if (g == 0.0) continue;
      const double c = t.cosine(b, j);
      double f = c, df = 1.0;
      if (j == y) {
        const auto [psi, dpsi] = psi_of_cos(c, margin);
        f = (lambda * c + psi) / (1.0 + lambda);
        df = (lambda + dpsi) / (1.0 + lambda);
      }
      axpy(g * (f - df * c), t.xhat.row(b), dx);
      axpy(g * df, t.what.row(j), dx);
      axpy(g * df, x.row(b), g_what.row(j));
    }
  }
  for (std::size_t j = 0; j < weight.rows; ++j) backprop_normalize(g_what.row(j), t.what.row(j), t.wnorms[j]);
  Gradients grads;
  grads.params.push_back(std::move(g_what.data));
  grads.d_input = std::move(d_input);
  return grads;
}

// ---------------------------------------------------------------------- init

std::unique_ptr<ClassifierHead> init_head(const HeadSpec& spec, std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  if (spec.kind == HeadKind::Symmetric) {
    if (n < 3) throw InvalidClassCount(n);
    for (int attempt = 0; attempt < 100; ++attempt) {
      VectorD v1 = rng.uniform_vector(d);
      VectorD v2 = rng.uniform_vector(d);
      try {
        (void)gram_schmidt(v1, v2);
      } catch (const DegenerateInput&) {
        continue;
      }
      return std::make_unique<SymmetricalHead>(std::move(v1), std::move(v2), spec.sigma, n);
    }
    throw DegenerateInput("init_head: 100 draws of (v1, v2) were all degenerate");
  }

  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix w(n, d);
  for (double& v : w.data) v = rng.uniform(-bound, bound);
  switch (spec.kind) {
    case HeadKind::FC:
      return std::make_unique<FcHead>(std::move(w), std::vector<double>(n, 0.0));
    case HeadKind::ArcFace:
      return std::make_unique<ArcFaceHead>(std::move(w), spec.sigma, spec.margin);
    case HeadKind::SphereFace: {
      const double rounded = std::round(spec.margin);
      if (rounded < 1.0 || std::abs(rounded - spec.margin) > 1e-12)
        throw ConfigError("SphereFace margin must be a positive integer");
      return std::make_unique<SphereFaceHead>(std::move(w), static_cast<int>(rounded));
    }
    case HeadKind::Symmetric: break;
  }
  throw ConfigError("unhandled head kind");
}

}  // namespace symfs
