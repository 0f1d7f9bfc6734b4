#include "symfs/lemmas.hpp"

#include <algorithm>
#include <ostream>

#include "symfs/analysis.hpp"
#include "symfs/csv.hpp"
#include "symfs/error.hpp"
#include "symfs/geometry.hpp"
#include "symfs/rng.hpp"

namespace symfs {

namespace {

PlaneBasis random_basis(Rng& rng, std::size_t d) {
  while (true) {
    try {
      return gram_schmidt(rng.normal_vector(d), rng.normal_vector(d));
    } catch (const DegenerateInput&) {
    }
  }
}

// Plane through `through` completed by a random direction.
PlaneBasis random_plane_through(Rng& rng, const VectorD& through) {
  while (true) {
    try {
      return gram_schmidt(through, rng.normal_vector(through.dim()));
    } catch (const DegenerateInput&) {
    }
  }
}

}  // namespace

void LemmaSuiteConfig::validate() const {
  if (n_min < 3) throw ConfigError("lemma suite: n must be at least 3");
  if (n_max < n_min) throw ConfigError("lemma suite: empty n range");
  if (dims.empty()) throw ConfigError("lemma suite: empty dimension list");
  for (std::size_t d : dims)
    if (d < 2) throw ConfigError("lemma suite: dimensions must be at least 2");
  if (trials == 0) throw ConfigError("lemma suite: trials must be positive");
  if (!(tol > 0.0)) throw ConfigError("lemma suite: tolerance must be positive");
}

std::vector<LemmaRow> run_lemma_suite(const LemmaSuiteConfig& config) {
  config.validate();
  std::vector<LemmaRow> rows;
  for (std::size_t n = config.n_min; n <= config.n_max; ++n) {
    const double scalar_lemma2 = verify_lemma2(n, config.tol).max_abs_residual;
    for (std::size_t d : config.dims) {
      for (std::size_t t = 0; t < config.trials; ++t) {
        Rng rng(derive_seed(config.seed, (n << 40) ^ (d << 20) ^ t));
        const SymmetricLayout layout = build_symmetric_layout(random_basis(rng, d), n);

        const double sum_norm = check_layout(layout).sum_norm;
        rows.push_back({1, n, d, t, sum_norm, sum_norm <= config.tol});

        const std::size_t cls = t % n;
        const double astride = astride_cancellation_check(layout, cls, random_plane_through(rng, layout.weights[cls]).n2);
        const double r2 = std::max(astride, scalar_lemma2);
        rows.push_back({2, n, d, t, r2, r2 <= config.tol});

        VectorD a = rng.unit_vector(d), b = rng.unit_vector(d);
        const RhombusReport rh = verify_lemma3(a, b, random_plane_through(rng, a + b));
        const double r3 = rh.residual();
        rows.push_back({3, n, d, t, r3, r3 <= config.tol});
      }
    }
  }
  return rows;
}

void write_lemma_csv(std::ostream& out, const std::vector<LemmaRow>& rows) {
  out << "lemma,n,d,trial,residual,pass\n";
  for (const auto& r : rows)
    out << r.lemma << ',' << r.n << ',' << r.d << ',' << r.trial << ',' << format_real(r.residual) << ','
        << (r.pass ? 1 : 0) << '\n';
}

}  // namespace symfs
