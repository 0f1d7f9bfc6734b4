#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "symfs/analysis.hpp"
#include "symfs/error.hpp"
#include "symfs/rng.hpp"

using namespace symfs;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

PlaneBasis xy_plane(std::size_t d) { return {unit_vector(d, 0), unit_vector(d, 1)}; }

WeightSet asymmetric_set() { return WeightSet::from_planar({0.0, 30.0 * kDeg, 180.0 * kDeg}); }

// Circular distance in degrees.
double deg_distance(double a_deg, double b_deg) {
  double d = std::fmod(std::abs(a_deg - b_deg), 360.0);
  return std::min(d, 360.0 - d);
}

}  // namespace

TEST_CASE("sweep sample count follows the resolution") {
  CHECK(sweep_samples(1.0) == 360);
  CHECK(sweep_samples(0.1) == 3600);
  CHECK(sweep_samples(0.7) == 515);
}

TEST_CASE("sweep rejects bad arguments") {
  const auto ws = asymmetric_set();
  CHECK_THROWS_AS(sweep(ws, xy_plane(2), 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(sweep(ws, xy_plane(2), 1.5, 1.0), ConfigError);
  CHECK_THROWS_AS(sweep(ws, xy_plane(2), 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(sweep(WeightSet::from_planar({0.0}), xy_plane(2), 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(sweep(ws, xy_plane(3), 1.0, 1.0), ConfigError);
}

TEST_CASE("square layout winner changes at 45, 135, 225 and 315 degrees") {
  const auto ws = WeightSet::from_layout(build_symmetric_layout(xy_plane(2), 4));
  const auto sw = sweep(ws, xy_plane(2), 1.0, 1.0);
  REQUIRE(sw.samples() == 360);
  std::vector<std::size_t> changes;
  for (std::size_t t = 1; t < 360; ++t)
    if (sw.winner[t] != sw.winner[t - 1]) changes.push_back(t);
  REQUIRE(changes.size() == 4);
  CHECK(sw.winner[0] == 0);
  CHECK(sw.winner[359] == 0);
  const std::size_t expected[] = {45, 135, 225, 315};
  for (std::size_t k = 0; k < 4; ++k) {
    // The boundary sample itself is an exact tie, so the switch lands on it or just after.
    CHECK(changes[k] >= expected[k]);
    CHECK(changes[k] <= expected[k] + 1);
  }
  CHECK(sw.winner[314] == 3);
  CHECK(sw.winner[316] == 0);
}

TEST_CASE("softmax columns sum to one and stay in (0, 1)") {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const std::size_t d = 3 + static_cast<std::size_t>(t);
    WeightSet ws;
    for (int j = 0; j < 5; ++j) ws.weights.push_back(rng.normal_vector(d));
    const PlaneBasis plane = gram_schmidt(rng.normal_vector(d), rng.normal_vector(d));
    // Large sigma saturates entries to exactly 0 or 1 in double precision, so
    // the open-interval check only applies at moderate sigma.
    const double sigma = 1.0 + 10.0 * t;
    const auto sw = sweep(ws, plane, 0.5, sigma);
    for (std::size_t s = 0; s < sw.samples(); ++s) {
      double total = 0.0;
      for (std::size_t j = 0; j < sw.classes(); ++j) {
        const double v = sw.softmax(j, s);
        total += v;
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        if (sigma <= 11.0) {
          CHECK(v > 0.0);
          CHECK(v < 1.0);
        }
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("logit maxima of the asymmetric set sit on the weight orientations") {
  const auto ws = asymmetric_set();
  const auto sw = sweep(ws, xy_plane(2), 0.1, 1.0);
  const double expected[] = {0.0, 30.0, 180.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto row = sw.logits.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    CHECK(deg_distance(sw.thetas[best] / kDeg, expected[i]) <= 0.05);
  }
}

TEST_CASE("sweep CSV layout") {
  const auto sw = sweep(asymmetric_set(), xy_plane(2), 1.0, 1.0);
  std::ostringstream out;
  write_sweep_csv(out, sw);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "theta_deg,z_0,z_1,z_2,s_0,s_1,s_2,winner");
  std::getline(in, line);
  CHECK(line.rfind("0.000000,1,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("1.000000,", 0) == 0);
  std::size_t rows = 2;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 360);
}

TEST_CASE("criterion_sum examples") {
  const PlanarWeights sym{{1, 1, 1}, {0, 2 * kPi / 3, 4 * kPi / 3}};
  CHECK(std::abs(criterion_sum(sym, 0.0)) <= 1e-12);

  const PlanarWeights half{{1, 1, 1}, {0, kPi / 3, 2 * kPi / 3}};
  CHECK(criterion_sum(half, 0.0) == doctest::Approx(1.953105463671347).epsilon(1e-12));

  const PlanarWeights single{{1}, {0}};
  CHECK(std::abs(criterion_sum(single, kPi)) <= 1e-15);
}

TEST_CASE("criterion_sum has the sign of the softmax slope") {
  // At class 0's own orientation z_0' vanishes, so dS_0/dtheta equals
  // -S_0 * sum / sum_j e^{z_j}: the finite difference has the opposite sign.
  const auto ws = asymmetric_set();
  const auto& planar = *ws.planar;
  auto s0 = [&](double th) {
    double denom = 0.0;
    for (std::size_t j = 0; j < 3; ++j) denom += std::exp(std::cos(th - planar.angles[j]));
    return std::exp(std::cos(th - planar.angles[0])) / denom;
  };
  const double fd = (s0(1e-6) - s0(-1e-6)) / 2e-6;
  CHECK(fd * criterion_sum(planar, 0.0) < 0.0);
}

TEST_CASE("criterion roots of symmetric layouts for n in [3, 64]") {
  double worst = 0.0;
  for (std::size_t n = 3; n <= 64; ++n) {
    const auto ws = WeightSet::from_layout(build_symmetric_layout(xy_plane(3), n));
    for (std::size_t r = 0; r < n; ++r)
      worst = std::max(worst, std::abs(criterion_sum(*ws.planar, 2.0 * kPi * static_cast<double>(r) / n)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("verify_lemma2 examples") {
  const auto r3 = verify_lemma2(3, 1e-10);
  CHECK(r3.passes);
  CHECK(r3.max_abs_residual <= 1e-12);
  CHECK(verify_lemma2(10, 1e-10).passes);
  CHECK_THROWS_AS(verify_lemma2(1, 1e-10), ConfigError);
  CHECK_THROWS_AS(verify_lemma2(3, 0.0), ConfigError);
}

TEST_CASE("lemma2_sum discriminates non-roots") {
  // pi/3 is itself a root of the three-term sum (odd symmetry about the
  // midpoint between claimed roots), so pi/6 serves as the non-root probe.
  CHECK(std::abs(lemma2_sum(3, kPi / 3)) <= 1e-12);
  CHECK(std::abs(lemma2_sum(3, kPi / 6)) > 0.1);
  CHECK(std::abs(lemma2_sum(3, kPi / 6)) == doctest::Approx(0.39898).epsilon(1e-4));
}

TEST_CASE("verify_lemma2 reports midpoint roots without failing") {
  const auto rep = verify_lemma2(4, 1e-10);
  CHECK(rep.passes);
  for (double x : rep.extra_roots) {
    const double k = x / (kPi / 4);
    CHECK(std::abs(k - std::round(k)) <= 1e-6);
  }
}

TEST_CASE("verify_lemma2 passes for n up to 64") {
  for (std::size_t n = 2; n <= 64; ++n) CHECK(verify_lemma2(n, 1e-10).passes);
}

TEST_CASE("refutability_value examples") {
  const double oracle = std::sin(kPi / 3) * std::exp(0.5) + std::sin(2 * kPi / 3) * std::exp(-0.5);
  CHECK(std::abs(refutability_value(3) - oracle) <= 1e-12);
  CHECK(refutability_value(3) == doctest::Approx(1.9532).epsilon(1e-4));
  CHECK(refutability_value(4) > 0.0);
  CHECK(refutability_value(64) > 0.0);
  CHECK_THROWS_AS(refutability_value(2), InvalidClassCount);
}

TEST_CASE("refutability_value stays positive over n in [3, 256]") {
  for (std::size_t n = 3; n <= 256; ++n) CHECK(refutability_value(n) > 0.0);
}

TEST_CASE("find_extrema on cosine samples") {
  std::vector<double> values;
  const std::size_t count = 3600;
  for (std::size_t k = 0; k < count; ++k) values.push_back(std::cos(2 * kPi * k / count));

  SUBCASE("quadratic refinement") {
    const auto ext = find_extrema(values);
    REQUIRE(ext.size() == 2);
    CHECK(ext[0].is_max);
    CHECK(std::abs(ext[0].theta) <= 0.01 * kDeg);
    CHECK_FALSE(ext[1].is_max);
    CHECK(std::abs(ext[1].theta - kPi) <= 0.01 * kDeg);
  }
  SUBCASE("bisection on the analytic derivative") {
    const auto ext = find_extrema(values, [](double t) { return -std::sin(t); });
    REQUIRE(ext.size() == 2);
    CHECK(std::abs(ext[1].theta - kPi) <= 1e-9);
  }
}

TEST_CASE("find_extrema on a shifted cosine") {
  const double shift = 1.2345;
  std::vector<double> values;
  for (std::size_t k = 0; k < 3600; ++k) values.push_back(std::cos(2 * kPi * k / 3600.0 - shift));
  const auto ext = find_extrema(values);
  REQUIRE(ext.size() == 2);
  const auto& mx = ext[0].is_max ? ext[0] : ext[1];
  CHECK(std::abs(mx.theta - shift) <= 0.01 * kDeg);
}

TEST_CASE("find_extrema rejects constant input") {
  const std::vector<double> flat(360, 0.25);
  CHECK_THROWS_AS(find_extrema(flat), NoExtremumFound);
}

TEST_CASE("symmetric softmax maxima sit on the weight orientations") {
  for (std::size_t n : {3u, 5u, 10u}) {
    const auto layout = build_symmetric_layout(xy_plane(2), n);
    const auto ws = WeightSet::from_layout(layout);
    const auto sw = sweep(ws, layout.basis, 0.1, 4.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ext = find_extrema(sw.softmax.row(i));
      bool found = false;
      for (const auto& e : ext)
        if (e.is_max && deg_distance(e.theta / kDeg, ws.planar->angles[i] / kDeg) <= 0.01) found = true;
      CHECK(found);
    }
  }
}

TEST_CASE("asymmetric set: class-0 softmax maximum moves away from 0 degrees") {
  const auto div = extremum_divergence(asymmetric_set(), xy_plane(2), 1.0);
  REQUIRE(div.size() == 3);
  CHECK(deg_distance(div[0].dot_peak_deg, 0.0) <= 0.01);
  CHECK(deg_distance(div[0].softmax_peak_deg, 0.0) > 0.5);
  double worst = 0.0;
  for (const auto& d : div) worst = std::max(worst, d.divergence_deg);
  CHECK(worst > 0.5);
  // Dense reference values from an independent 0.01 degree sweep.
  CHECK(div[0].divergence_deg == doctest::Approx(35.06).epsilon(1e-3));
  CHECK(div[1].divergence_deg == doctest::Approx(25.09).epsilon(1e-3));
  CHECK(div[2].divergence_deg == doctest::Approx(7.62).epsilon(1e-3));
}

TEST_CASE("symmetric layouts show no divergence at any sigma") {
  Rng rng(4);
  for (std::size_t n : {3u, 4u, 7u, 16u}) {
    for (double sigma : {1.0, 8.0, 32.0}) {
      const auto layout = build_symmetric_layout(gram_schmidt(rng.normal_vector(6), rng.normal_vector(6)), n);
      for (const auto& d : extremum_divergence(WeightSet::from_layout(layout), layout.basis, sigma))
        CHECK(d.divergence_deg <= 0.02);
    }
  }
}

// At sigma = 64 with n = 5 the competing terms near each weight are about
// e^-44, so S_i rounds to exactly 1.0 over a band of angles. The peak must
// still land on the weight.
TEST_CASE("saturated softmax peaks still coincide with the weights") {
  for (std::size_t n : {5u, 8u}) {
    for (double sigma : {64.0, 128.0}) {
      const auto layout = build_symmetric_layout(xy_plane(2), n);
      for (const auto& d : extremum_divergence(WeightSet::from_layout(layout), layout.basis, sigma))
        CHECK(d.divergence_deg <= 0.02);
    }
  }
}

TEST_CASE("divergence is unchanged by a global rotation of the layout") {
  const PlaneBasis plane = xy_plane(2);
  const std::vector<double> angles{0.0, 30.0 * kDeg, 180.0 * kDeg};
  std::vector<double> shifted;
  for (double a : angles) shifted.push_back(a + 40.0 * kDeg);
  const auto base = extremum_divergence(WeightSet::from_planar(angles), plane, 1.0);
  const auto moved = extremum_divergence(WeightSet::from_planar(shifted), plane, 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(base[i].divergence_deg - moved[i].divergence_deg) <= 0.02);
}

TEST_CASE("astride check on the layout's own plane") {
  const auto layout = build_symmetric_layout(xy_plane(5), 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(astride_cancellation_check(layout, i, layout.basis.n2) <= 1e-12);
}

TEST_CASE("astride check on random planes through a weight") {
  Rng rng(8);
  const auto layout = build_symmetric_layout(gram_schmidt(rng.normal_vector(8), rng.normal_vector(8)), 5);
  CHECK(astride_cancellation_check(layout, 0, rng.normal_vector(8)) <= 1e-10);

  double worst = 0.0;
  for (std::size_t n = 3; n <= 16; ++n) {
    for (std::size_t d : {3u, 8u, 32u}) {
      for (int t = 0; t < 100; ++t) {
        const auto lay = build_symmetric_layout(gram_schmidt(rng.normal_vector(d), rng.normal_vector(d)), n);
        worst = std::max(worst, astride_cancellation_check(lay, t % n, rng.normal_vector(d)));
      }
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("astride check flags asymmetric weights") {
  const std::vector<VectorD> weights{{1, 0, 0}, {0.5, std::sqrt(3.0) / 2, 0}, {-0.5, std::sqrt(3.0) / 2, 0}};
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, astride_residual(weights, i, {0, 1, 0.3}));
  CHECK(worst > 1e-3);
}

TEST_CASE("astride check rejects a seed parallel to the weight") {
  const auto layout = build_symmetric_layout(xy_plane(4), 4);
  CHECK_THROWS_AS(astride_cancellation_check(layout, 0, 3.0 * layout.weights[0]), DegenerateInput);
}
