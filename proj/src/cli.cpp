#include "symfs/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "symfs/analysis.hpp"
#include "symfs/csv.hpp"
#include "symfs/dataset.hpp"
#include "symfs/error.hpp"
#include "symfs/lemmas.hpp"
#include "symfs/serialize.hpp"
#include "symfs/stability.hpp"
#include "symfs/trainer.hpp"

namespace symfs::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestName = "manifest";

template <typename T>
T parse_number(std::string_view text, const char* what) {
  text = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError(std::string(what) + ": '" + std::string(text) + "' is not a valid number");
  return v;
}

template <typename T>
std::vector<T> parse_number_list(std::string_view text, const char* what) {
  std::vector<T> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_number<T>(part, what));
  return out;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

// Resolved option values of a subcommand as key=value lines, plus free-form
// comment lines (derived seeds etc.). Loadable again through --config.
void write_manifest(const fs::path& dir, const CLI::App& sub, const std::vector<std::string>& comments) {
  auto out = open_output(dir / kManifestName);
  out << "# symfs " << sub.get_name() << '\n';
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    const std::string value = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
    out << name << '=' << value << '\n';
  }
  for (const auto& c : comments) out << "# " << c << '\n';
}

// ------------------------------------------------------------ shared flags

struct DataFlags {
  std::string dataset = "blobs:10x64";
  std::size_t per_class = 625;
  double spread = 0.05;
  std::uint64_t data_seed = 7;

  void add(CLI::App* app) {
    app->add_option("--dataset", dataset, "blobs:CLASSESxDIM | idx:IMAGES,LABELS[,EVAL_IMAGES,EVAL_LABELS]");
    app->add_option("--per-class", per_class, "blob samples per class (80% train / 20% eval)");
    app->add_option("--spread", spread, "blob standard deviation");
    app->add_option("--data-seed", data_seed, "blob generator seed");
  }

  DatasetPair load() const {
    const auto colon = dataset.find(':');
    if (colon == std::string::npos) throw ConfigError("--dataset: expected kind:args, got '" + dataset + "'");
    const std::string kind = dataset.substr(0, colon);
    const std::string rest = dataset.substr(colon + 1);
    if (kind == "blobs") {
      const auto x = rest.find('x');
      if (x == std::string::npos) throw ConfigError("--dataset blobs: expected CLASSESxDIM");
      BlobSpec spec;
      spec.classes = parse_number<std::size_t>(rest.substr(0, x), "--dataset classes");
      spec.input_dim = parse_number<std::size_t>(rest.substr(x + 1), "--dataset dimension");
      spec.per_class = per_class;
      spec.spread = spread;
      spec.seed = data_seed;
      return make_blobs(spec);
    }
    if (kind == "idx") {
      const auto paths = split(rest, ',');
      if (paths.size() == 2) return split_dataset(load_idx(paths[0], paths[1]), 0.8);
      if (paths.size() == 4) {
        DatasetPair pair{load_idx(paths[0], paths[1], Split::Train), load_idx(paths[2], paths[3], Split::Eval)};
        const std::size_t classes = std::max(pair.train.classes, pair.eval.classes);
        pair.train.classes = pair.eval.classes = classes;
        return pair;
      }
      throw ConfigError("--dataset idx: expected 2 or 4 comma-separated paths");
    }
    throw ConfigError("--dataset: unknown kind '" + kind + "'");
  }
};

struct TrainFlags {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::string lr_decay = "0.5,0.75";
  std::string widths = "64,64";
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", lr, "initial learning rate");
    app->add_option("--momentum", momentum);
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--lr-decay", lr_decay, "fractions of the run where the learning rate drops 10x");
    app->add_option("--widths", widths, "hidden layer widths, comma separated (empty for a linear probe)");
    app->add_option("--seed", seed);
  }

  TrainConfig config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.lr0 = lr;
    cfg.momentum = momentum;
    cfg.weight_decay = weight_decay;
    cfg.lr_decay_fractions = parse_number_list<double>(lr_decay, "--lr-decay");
    cfg.widths = parse_number_list<std::size_t>(widths, "--widths");
    cfg.seed = seed;
    return cfg;
  }
};

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// ---------------------------------------------------------------- commands

struct VerifyLemmas {
  std::size_t n_min = 3, n_max = 32, trials = 50;
  std::string dims = "2,3,8,32";
  double tol = 1e-9;
  std::uint64_t seed = 1;
  std::string out_dir = "out/verify-lemmas";

  void add(CLI::App* app) {
    app->add_option("--n-min", n_min);
    app->add_option("--n-max", n_max);
    app->add_option("--dims", dims, "feature dimensions, comma separated");
    app->add_option("--trials", trials);
    app->add_option("--tol", tol, "residual tolerance");
    app->add_option("--seed", seed);
    app->add_option("--out", out_dir);
  }

  int run(const CLI::App& sub, std::ostream& out) const {
    LemmaSuiteConfig cfg{n_min, n_max, parse_number_list<std::size_t>(dims, "--dims"), trials, tol, seed};
    cfg.validate();
    fs::create_directories(out_dir);
    write_manifest(out_dir, sub, {});
    const auto rows = run_lemma_suite(cfg);
    auto csv = open_output(fs::path(out_dir) / "lemmas.csv");
    write_lemma_csv(csv, rows);

    bool all = true;
    for (int lemma = 1; lemma <= 3; ++lemma) {
      double worst = 0.0;
      std::size_t fails = 0, total = 0;
      for (const auto& r : rows) {
        if (r.lemma != lemma) continue;
        ++total;
        worst = std::max(worst, r.residual);
        fails += !r.pass;
      }
      all = all && fails == 0;
      out << "lemma " << lemma << ": " << total - fails << "/" << total << " pass, max residual "
          << format_real(worst) << '\n';
    }
    return all ? kSuccess : kVerificationFailed;
  }
};

struct Analyze {
  std::string weights = "symmetric:10";
  double sigma = 1.0;
  double resolution = kDefaultResolutionDeg;
  std::string out_dir = "out/analyze";

  void add(CLI::App* app) {
    app->add_option("--weights", weights, "symmetric:N or angles:DEG,DEG,...");
    app->add_option("--sigma", sigma, "logit scale");
    app->add_option("--resolution", resolution, "sweep resolution in degrees, (0, 1]");
    app->add_option("--out", out_dir);
  }

  WeightSet weight_set() const {
    const auto colon = weights.find(':');
    if (colon == std::string::npos) throw ConfigError("--weights: expected symmetric:N or angles:LIST");
    const std::string kind = weights.substr(0, colon);
    const std::string rest = weights.substr(colon + 1);
    if (kind == "symmetric") {
      const auto n = parse_number<std::size_t>(rest, "--weights symmetric");
      return WeightSet::from_layout(build_symmetric_layout({unit_vector(2, 0), unit_vector(2, 1)}, n));
    }
    if (kind == "angles") {
      auto degs = parse_number_list<double>(rest, "--weights angles");
      if (degs.size() < 2) throw ConfigError("--weights angles: need at least 2 weights");
      for (double& a : degs) a *= std::numbers::pi / 180.0;
      return WeightSet::from_planar(std::move(degs));
    }
    throw ConfigError("--weights: unknown kind '" + kind + "'");
  }

  int run(const CLI::App& sub, std::ostream& out) const {
    const WeightSet ws = weight_set();
    const PlaneBasis plane{unit_vector(2, 0), unit_vector(2, 1)};
    const SweepResult sw = sweep(ws, plane, resolution, sigma);
    const auto div = extremum_divergence(ws, plane, sigma, resolution);

    fs::create_directories(out_dir);
    write_manifest(out_dir, sub, {});
    auto sweep_csv = open_output(fs::path(out_dir) / "sweep.csv");
    write_sweep_csv(sweep_csv, sw);
    auto div_csv = open_output(fs::path(out_dir) / "divergence.csv");
    div_csv << "class,dot_peak_deg,softmax_peak_deg,divergence_deg\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < div.size(); ++i) {
      div_csv << i << ',' << format_fixed(div[i].dot_peak_deg, 6) << ',' << format_fixed(div[i].softmax_peak_deg, 6)
              << ',' << format_fixed(div[i].divergence_deg, 6) << '\n';
      worst = std::max(worst, div[i].divergence_deg);
    }
    out << "max_divergence_deg=" << format_fixed(worst, 6) << '\n';
    return kSuccess;
  }
};

struct Refute {
  std::size_t n_max = 64;
  std::string out_dir = "out/refute";

  void add(CLI::App* app) {
    app->add_option("--n-max", n_max);
    app->add_option("--out", out_dir);
  }

  int run(const CLI::App& sub, std::ostream& out) const {
    if (n_max < 3) throw ConfigError("--n-max must be at least 3");
    fs::create_directories(out_dir);
    write_manifest(out_dir, sub, {});
    auto csv = open_output(fs::path(out_dir) / "refute.csv");
    csv << "n,value,positive\n";
    std::size_t positive = 0;
    for (std::size_t n = 3; n <= n_max; ++n) {
      const double v = refutability_value(n);
      positive += v > 0.0;
      csv << n << ',' << format_real(v) << ',' << (v > 0.0 ? 1 : 0) << '\n';
    }
    out << positive << "/" << n_max - 2 << " values positive\n";
    return positive == n_max - 2 ? kSuccess : kVerificationFailed;
  }
};

struct Train {
  DataFlags data;
  TrainFlags train;
  std::string head = "symmetric";
  double sigma = 16.0;
  std::string margin;  // empty: 0.1 for arcface, 4 for sphereface
  std::string out_dir = "out/train";

  void add(CLI::App* app) {
    app->add_option("--head", head, "symmetric | fc | arcface | sphereface");
    app->add_option("--sigma", sigma, "logit scale (symmetric, arcface)");
    app->add_option("--margin", margin, "arcface additive angle (default 0.1) or sphereface integer (default 4)");
    data.add(app);
    train.add(app);
    app->add_option("--out", out_dir);
  }

  HeadSpec head_spec() const {
    HeadSpec spec;
    spec.kind = parse_head_kind(head);
    spec.sigma = spec.kind == HeadKind::SphereFace ? 1.0 : sigma;
    if (margin.empty()) {
      spec.margin = spec.kind == HeadKind::SphereFace ? 4.0 : 0.1;
    } else {
      spec.margin = parse_number<double>(margin, "--margin");
    }
    if (spec.kind == HeadKind::SphereFace && (spec.margin < 1.0 || spec.margin != std::round(spec.margin)))
      throw ConfigError("--margin for sphereface must be a positive integer");
    return spec;
  }

  int run(const CLI::App& sub, std::ostream& out) const {
    TrainConfig cfg = train.config();
    cfg.head = head_spec();
    cfg.validate();
    const DatasetPair pair = data.load();
    fs::create_directories(out_dir);
    write_manifest(out_dir, sub,
                   {"resolved_margin=" + format_real(cfg.head.margin), "lr_milestones=" + join_sizes(cfg.lr_milestones())});

    TrainedModel model = train_model(cfg, pair);
    auto csv = open_output(fs::path(out_dir) / "runlog.csv");
    write_runlog_csv(csv, model.log);
    auto mon = open_output(fs::path(out_dir) / "monitor.csv");
    write_monitor_csv(mon, model.log);
    std::ofstream ckpt(fs::path(out_dir) / "head.bin", std::ios::binary);
    save_head(ckpt, *model.head);

    out << "head=" << to_string(cfg.head.kind) << " epochs=" << model.log.epochs.size()
        << " best_eval_acc=" << format_fixed(model.log.best_eval_acc, 4)
        << " diverged=" << (model.log.diverged ? "yes" : "no") << '\n';
    return kSuccess;
  }
};

struct Stability {
  DataFlags data;
  TrainFlags train;
  std::string grid = "arcface:sigma=4,8,16,32,64:m=0.1";
  std::size_t repeats = 3;
  std::size_t threads = 0;
  std::string out_dir = "out/stability";

  void add(CLI::App* app) {
    app->add_option("--grid", grid, "cells: kind:sigma=a,b:m=x;kind2:...");
    app->add_option("--repeats", repeats);
    app->add_option("--threads", threads, "concurrent runs (0 = all cores)");
    data.add(app);
    train.add(app);
    app->add_option("--out", out_dir);
  }

  int run(const CLI::App& sub, std::ostream& out) const {
    if (repeats < 1) throw ConfigError("--repeats must be at least 1");
    const TrainConfig base = train.config();
    base.validate();
    const auto cells = parse_grid(grid);
    const DatasetPair pair = data.load();
    fs::create_directories(out_dir);
    std::vector<std::string> seeds;
    for (std::size_t r = 0; r < repeats; ++r)
      seeds.push_back("repeat_seed." + std::to_string(r) + "=" + std::to_string(repeat_seed(base.seed, r)));
    write_manifest(out_dir, sub, seeds);

    const StabilityTable table = stability_study(cells, repeats, base, pair, threads);
    auto csv = open_output(fs::path(out_dir) / "stability.csv");
    write_stability_csv(csv, table);
    for (const auto& cell : table.summarize()) {
      out << to_string(cell.head.kind) << " sigma=" << format_real(cell.head.sigma)
          << " m=" << format_real(cell.head.margin) << ": diverged " << cell.diverged << "/" << cell.runs
          << ", accuracy spread " << format_fixed(100.0 * cell.accuracy_spread, 2) << " points\n";
    }
    return kSuccess;
  }
};

struct Bench {
  DataFlags data;
  TrainFlags train;
  std::size_t repeats = 3;
  double sigma = 16.0;
  double arcface_sigma = 16.0;
  double arcface_margin = 0.1;
  int sphereface_margin = 4;
  std::string out_dir = "out/bench";

  void add(CLI::App* app) {
    app->add_option("--repeats", repeats, "timed epochs per head (>= 3)");
    app->add_option("--sigma", sigma, "symmetric head scale");
    app->add_option("--arcface-sigma", arcface_sigma);
    app->add_option("--arcface-margin", arcface_margin);
    app->add_option("--sphereface-margin", sphereface_margin);
    data.add(app);
    train.add(app);
    app->add_option("--out", out_dir);
  }

  int run(const CLI::App& sub, std::ostream& out) const {
    if (repeats < 3) throw ConfigError("--repeats must be at least 3");
    const TrainConfig base = train.config();
    base.validate();
    const DatasetPair pair = data.load();
    fs::create_directories(out_dir);
    write_manifest(out_dir, sub, {});
    const std::vector<HeadSpec> heads{{HeadKind::FC, 1.0, 0.0},
                                      {HeadKind::SphereFace, 1.0, static_cast<double>(sphereface_margin)},
                                      {HeadKind::ArcFace, arcface_sigma, arcface_margin},
                                      {HeadKind::Symmetric, sigma, 0.0}};
    const auto rows = bench_epoch(base, pair, repeats, heads);
    auto csv = open_output(fs::path(out_dir) / "bench.csv");
    write_bench_csv(csv, rows);
    for (const auto& r : rows)
      out << to_string(r.kind) << ": " << format_fixed(r.mean_sec, 4) << " ± " << format_fixed(r.std_sec, 4)
          << " s/epoch\n";
    return kSuccess;
  }
};

}  // namespace

std::map<std::string, std::string> read_key_value_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key(trim(t.substr(0, eq)));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, std::string(trim(t.substr(eq + 1)))).second)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      config_path = args[++i];
    } else if (args[i].starts_with("--config=")) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty() || rest.size() < 2) return rest;
  std::vector<std::string> out{rest[0], rest[1]};
  for (const auto& [key, value] : read_key_value_file(config_path)) {
    // "--key=" with nothing after it would make the parser swallow the next
    // token, so empty values travel as a separate empty argument.
    if (value.empty()) {
      out.push_back("--" + key);
      out.push_back("");
    } else {
      out.push_back("--" + key + "=" + value);
    }
  }
  out.insert(out.end(), rest.begin() + 2, rest.end());
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symmetric classifier-head experiments"};
  app.name("symfs");
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  VerifyLemmas verify;
  Analyze analyze;
  Refute refute;
  Train train;
  Stability stability;
  Bench bench;
  auto* s_verify = app.add_subcommand("verify-lemmas", "randomized checks of the three layout lemmas");
  auto* s_analyze = app.add_subcommand("analyze", "angular sweep and softmax/dot-product peak divergence");
  auto* s_refute = app.add_subcommand("refute", "criterion value of the half-fan layout for n = 3..N");
  auto* s_train = app.add_subcommand("train", "train one backbone + head");
  auto* s_stability = app.add_subcommand("stability", "seed-repeat stability grid");
  auto* s_bench = app.add_subcommand("bench", "seconds per epoch for each head");
  verify.add(s_verify);
  analyze.add(s_analyze);
  refute.add(s_refute);
  train.add(s_train);
  stability.add(s_stability);
  bench.add(s_bench);
  // Accepted (and consumed by expand_config) on every subcommand.
  std::string config_file;
  for (auto* sub : app.get_subcommands({}))
    sub->add_option("--config", config_file, "key=value file; command-line flags take precedence");

  try {
    const auto args = expand_config(raw_args);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (s_verify->parsed()) return verify.run(*s_verify, out);
    if (s_analyze->parsed()) return analyze.run(*s_analyze, out);
    if (s_refute->parsed()) return refute.run(*s_refute, out);
    if (s_train->parsed()) return train.run(*s_train, out);
    if (s_stability->parsed()) return stability.run(*s_stability, out);
    if (s_bench->parsed()) return bench.run(*s_bench, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace symfs::cli
