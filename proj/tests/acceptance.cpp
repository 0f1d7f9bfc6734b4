// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Heavy criteria (training, stability, timing) run the real
// experiment configurations, so a full run takes a few minutes.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "symfs/analysis.hpp"
#include "symfs/cli.hpp"
#include "symfs/geometry.hpp"
#include "symfs/rng.hpp"
#include "symfs/stability.hpp"
#include "symfs/trainer.hpp"

using namespace symfs;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string pct(double v) { return fmt(100.0 * v, 4) + "%"; }

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "symfs_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "symfs");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code == 2) std::cerr << err.str();
  return code;
}

// 1. Lemma suite over n in [3, 32], d in {2, 3, 8, 32}, 50 trials, tol 1e-9.
Outcome lemma_suite(const fs::path& dir, double& limit) {
  limit = 30.0;
  const int code = run_cli({"verify-lemmas", "--n-min", "3", "--n-max", "32", "--dims", "2,3,8,32", "--trials", "50",
                            "--tol", "1e-9", "--out", (dir / "lemmas").string()});
  return {code == 0, "verify-lemmas exit " + std::to_string(code)};
}

// 2. Criterion roots on symmetric layouts, in-plane and on 100 random planes
// through a class weight per (n, d).
Outcome criterion_roots(const fs::path&, double& limit) {
  limit = 60.0;
  Rng rng(20);
  double in_plane = 0.0, astride = 0.0;
  for (std::size_t n = 3; n <= 64; ++n) {
    for (std::size_t d : {3u, 8u, 32u}) {
      const auto layout = build_symmetric_layout(gram_schmidt(rng.normal_vector(d), rng.normal_vector(d)), n);
      const PlanarWeights planar = planar_form(layout.weights, layout.basis);
      for (std::size_t r = 0; r < n; ++r)
        in_plane = std::max(in_plane, std::abs(criterion_sum(planar, 2.0 * kPi * static_cast<double>(r) / n)));
      for (std::size_t t = 0; t < 100; ++t)
        astride = std::max(astride, astride_cancellation_check(layout, t % n, rng.normal_vector(d)));
    }
  }
  return {in_plane <= 1e-10 && astride <= 1e-10,
          "max in-plane residual " + fmt(in_plane, 3) + ", max off-plane residual " + fmt(astride, 3)};
}

// 3. Refutability values positive for n in [3, 256]; n = 3 against direct
// summation.
Outcome refutability(const fs::path&, double& limit) {
  limit = 1.0;
  double smallest = INFINITY;
  for (std::size_t n = 3; n <= 256; ++n) smallest = std::min(smallest, refutability_value(n));
  const double oracle = 0.0 + std::sin(kPi / 3) * std::exp(0.5) + std::sin(2 * kPi / 3) * std::exp(-0.5);
  const double err = std::abs(refutability_value(3) - oracle);
  return {smallest > 0.0 && err <= 1e-9,
          "min value " + fmt(smallest, 6) + ", n=3 value " + fmt(refutability_value(3), 10) + " (|err| " +
              fmt(err, 2) + ")"};
}

// 4. Softmax versus dot-product peaks.
Outcome motivation(const fs::path&, double& limit) {
  limit = 10.0;
  const PlaneBasis plane{unit_vector(2, 0), unit_vector(2, 1)};
  double asym = 0.0;
  for (const auto& d : extremum_divergence(WeightSet::from_planar({0.0, kPi / 6, kPi}), plane, 1.0))
    asym = std::max(asym, d.divergence_deg);

  Rng rng(4);
  double sym = 0.0;
  for (std::size_t n : {3u, 4u, 5u, 8u, 10u, 16u}) {
    for (double sigma : {1.0, 4.0, 16.0, 64.0}) {
      const auto layout = build_symmetric_layout(gram_schmidt(rng.normal_vector(8), rng.normal_vector(8)), n);
      for (const auto& d : extremum_divergence(WeightSet::from_layout(layout), layout.basis, sigma))
        sym = std::max(sym, d.divergence_deg);
    }
  }
  return {asym > 0.5 && sym <= 0.02,
          "{0,30,180} max divergence " + fmt(asym) + " deg, symmetric max " + fmt(sym, 3) + " deg"};
}

// 5. Analytic gradients of every head with cross-entropy against central
// differences.
Outcome gradients(const fs::path&, double& limit) {
  limit = 30.0;
  Rng rng(55);
  double worst = 0.0;
  std::string per_head;
  for (HeadKind kind : {HeadKind::Symmetric, HeadKind::FC, HeadKind::ArcFace, HeadKind::SphereFace}) {
    double head_worst = 0.0;
    for (int c = 0; c < 20; ++c) {
      const auto cfg = gradcheck::random_config(kind, rng);
      head_worst = std::max(head_worst, gradcheck::check_config(cfg, rng).worst());
    }
    worst = std::max(worst, head_worst);
    per_head += std::string(per_head.empty() ? "" : ", ") + std::string(to_string(kind)) + " " + fmt(head_worst, 2);
  }
  return {worst <= 1e-5, "max relative error " + per_head};
}

BlobSpec desk_blobs(double spread) {
  BlobSpec spec;
  spec.classes = 10;
  spec.input_dim = 64;
  spec.per_class = 625;  // 500 train + 125 eval per class
  spec.spread = spread;
  return spec;
}

// 6. Symmetric head with sigma in {8, 16, 32} against FC on easy blobs.
Outcome convergence_parity(const fs::path&, double& limit) {
  limit = 600.0;
  const auto data = make_blobs(desk_blobs(0.05));
  TrainConfig fc;
  fc.head = {HeadKind::FC, 1.0, 0.0};
  const double baseline = train(fc, data).best_eval_acc;
  bool pass = true;
  std::string detail = "train " + std::to_string(data.train.size()) + ", FC " + pct(baseline);
  for (double sigma : {8.0, 16.0, 32.0}) {
    TrainConfig sym;
    sym.head = {HeadKind::Symmetric, sigma, 0.0};
    const RunLog log = train(sym, data);
    pass = pass && !log.diverged && std::abs(log.best_eval_acc - baseline) <= 0.02;
    detail += ", sym@" + fmt(sigma) + " " + pct(log.best_eval_acc);
  }
  return {pass, detail};
}

// 7. Seed-repeat variability, ArcFace against the symmetric head. Blobs with
// spread 0.15 keep accuracies below saturation so repeat-to-repeat spread is
// measurable. Each ArcFace cell is compared with the symmetric cell of the
// same sigma.
Outcome stability(const fs::path& dir, double& limit) {
  limit = 1800.0;
  const auto data = make_blobs(desk_blobs(0.15));
  const auto grid = parse_grid("symmetric:sigma=4,8,16,32,64;arcface:sigma=4,8,16,32,64:m=0.1");
  const StabilityTable table = stability_study(grid, 3, TrainConfig{}, data);
  std::ofstream csv(dir / "stability.csv");
  write_stability_csv(csv, table);

  const auto cells = table.summarize();
  std::size_t sym_diverged = 0;
  std::string more_variable;
  for (const auto& c : cells) {
    if (c.head.kind == HeadKind::Symmetric && c.head.sigma >= 8.0) sym_diverged += c.diverged;
    if (c.head.kind != HeadKind::ArcFace) continue;
    for (const auto& s : cells) {
      if (s.head.kind != HeadKind::Symmetric || s.head.sigma != c.head.sigma) continue;
      const bool by_flags = c.divergence_disagreement() && !s.divergence_disagreement();
      const bool by_spread = c.accuracy_spread > s.accuracy_spread + 1e-9;
      if (by_flags || by_spread)
        more_variable += " sigma=" + fmt(c.head.sigma) + (by_flags ? "(flags)" : "(spread)");
    }
  }
  std::string summary;
  for (const auto& c : cells)
    summary += std::string(summary.empty() ? "" : "; ") + std::string(to_string(c.head.kind)) + "@" +
               fmt(c.head.sigma) + " x" + std::to_string(c.diverged) + "/" + std::to_string(c.runs) + " spread " +
               fmt(100.0 * c.accuracy_spread, 3);
  return {sym_diverged == 0 && !more_variable.empty(),
          "(a) symmetric diverged cells " + std::to_string(sym_diverged) + "; (b) ArcFace more variable at" +
              (more_variable.empty() ? std::string(" none") : more_variable) + " [" + summary + "]"};
}

// 8. Epoch time of the symmetric head relative to FC.
Outcome timing(const fs::path&, double& limit) {
  limit = 0.0;
  const auto data = make_blobs(desk_blobs(0.05));
  const auto rows =
      bench_epoch(TrainConfig{}, data, 5, {{HeadKind::FC, 1.0, 0.0}, {HeadKind::Symmetric, 16.0, 0.0}});
  const double ratio = rows[1].mean_sec / rows[0].mean_sec;
  return {ratio <= 1.5, "FC " + fmt(rows[0].mean_sec, 3) + " +- " + fmt(rows[0].std_sec, 2) + " s, symmetric " +
                            fmt(rows[1].mean_sec, 3) + " +- " + fmt(rows[1].std_sec, 2) + " s, ratio " +
                            fmt(ratio, 3)};
}

std::vector<std::string> loss_columns(const fs::path& runlog) {
  std::ifstream in(runlog);
  std::vector<std::string> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(cells.at(1) + "," + cells.at(3));
  }
  return out;
}

// 9. A train run repeated from its manifest reproduces the loss columns.
Outcome determinism(const fs::path& dir, double& limit) {
  limit = 0.0;
  bool pass = true;
  std::string detail;
  for (const char* head : {"symmetric", "arcface"}) {
    const fs::path first = dir / (std::string("train_") + head), second = dir / (std::string("rerun_") + head);
    const int a = run_cli({"train", "--head", head, "--out", first.string()});
    const int b = run_cli({"train", "--config", (first / "manifest").string(), "--out", second.string()});
    const auto la = loss_columns(first / "runlog.csv"), lb = loss_columns(second / "runlog.csv");
    const bool same = a == 0 && b == 0 && !la.empty() && la == lb;
    pass = pass && same;
    detail += std::string(detail.empty() ? "" : ", ") + head + " " + std::to_string(la.size()) + " epochs " +
              (same ? "bit-identical" : "differ");
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const fs::path dir = work_dir();
  using Check = std::function<Outcome(const fs::path&, double&)>;
  const std::vector<std::pair<std::string, Check>> checks{
      {"lemma suite", lemma_suite},           {"criterion roots", criterion_roots},
      {"refutability", refutability},         {"softmax peak divergence", motivation},
      {"gradient correctness", gradients},    {"convergence parity", convergence_parity},
      {"stability phenomenology", stability}, {"timing parity", timing},
      {"determinism", determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    double limit = 0.0;
    Outcome o;
    try {
      o = checks[i].second(dir, limit);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string time_note = fmt(secs, 3) + " s";
    if (limit > 0.0) {
      time_note += " (limit " + fmt(limit) + " s)";
      if (secs >= limit) {
        o.pass = false;
        time_note += " over time budget";
      }
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << " " << checks[i].first << ": " << o.detail
              << " [" << time_note << "]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
