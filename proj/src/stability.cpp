#include "symfs/stability.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <thread>

#include "symfs/csv.hpp"
#include "symfs/error.hpp"
#include "symfs/rng.hpp"

namespace symfs {

namespace {

double parse_double(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("grid: '" + std::string(text) + "' is not a number");
  return v;
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part));
  return out;
}

}  // namespace

std::uint64_t repeat_seed(std::uint64_t base_seed, std::size_t repeat) { return derive_seed(base_seed, repeat); }

std::vector<CellSummary> StabilityTable::summarize() const {
  std::vector<CellSummary> out;
  std::vector<std::vector<double>> accs;
  for (const auto& row : rows) {
    if (row.repeat == 0 || out.empty()) {
      out.push_back({row.head});
      accs.emplace_back();
    }
    auto& cell = out.back();
    ++cell.runs;
    if (row.diverged) {
      ++cell.diverged;
    } else {
      accs.back().push_back(row.best_eval_acc);
    }
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    const auto& a = accs[c];
    if (a.size() >= 2) {
      const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
      out[c].accuracy_spread = *hi - *lo;
    }
  }
  return out;
}

StabilityTable stability_study(const std::vector<HeadSpec>& grid, std::size_t repeats, const TrainConfig& base,
                               const DatasetPair& data, std::size_t threads) {
  if (repeats < 1) throw ConfigError("stability study needs at least one repeat");
  base.validate();
  StabilityTable table;
  for (const auto& spec : grid)
    for (std::size_t r = 0; r < repeats; ++r) table.rows.push_back({spec, r, repeat_seed(base.seed, r)});

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, table.rows.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(table.rows.size());
  auto worker = [&] {
    for (std::size_t k = next++; k < table.rows.size(); k = next++) {
      StabilityRow& row = table.rows[k];
      try {
        TrainConfig cfg = base;
        cfg.head = row.head;
        cfg.seed = row.seed;
        const RunLog log = train(cfg, data);
        row.best_eval_acc = log.best_eval_acc;
        row.diverged = log.diverged;
        row.epochs_run = log.epochs.size();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return table;
}

std::vector<HeadSpec> parse_grid(std::string_view text, const HeadSpec& defaults) {
  std::vector<HeadSpec> grid;
  for (const auto& cell_text : split(text, ';')) {
    const auto trimmed = trim(cell_text);
    if (trimmed.empty()) continue;
    const auto fields = split(trimmed, ':');
    const HeadKind kind = parse_head_kind(trim(fields[0]));
    std::vector<double> sigmas{defaults.sigma}, margins{defaults.margin};
    if (kind == HeadKind::SphereFace) margins = {4.0};
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const auto eq = fields[f].find('=');
      if (eq == std::string::npos) throw ConfigError("grid: expected key=values in '" + fields[f] + "'");
      const auto key = trim(std::string_view(fields[f]).substr(0, eq));
      const auto values = parse_list(std::string_view(fields[f]).substr(eq + 1));
      if (key == "sigma") {
        sigmas = values;
      } else if (key == "m") {
        margins = values;
      } else {
        throw ConfigError("grid: unknown key '" + std::string(key) + "'");
      }
    }
    if (kind == HeadKind::SphereFace) sigmas = {1.0};
    for (double s : sigmas) {
      if (!(s > 0.0)) throw ConfigError("grid: sigma must be positive");
      for (double m : margins) {
        if (!(m >= 0.0)) throw ConfigError("grid: margin must be non-negative");
        grid.push_back({kind, s, m});
      }
    }
  }
  if (grid.empty()) throw ConfigError("grid: no cells");
  return grid;
}

void write_stability_csv(std::ostream& out, const StabilityTable& table) {
  out << "kind,sigma,m,repeat,seed,best_eval_acc_or_x\n";
  for (const auto& r : table.rows) {
    out << to_string(r.head.kind) << ',' << format_real(r.head.sigma) << ',' << format_real(r.head.margin) << ','
        << r.repeat << ',' << r.seed << ',';
    if (r.diverged) {
      out << 'x';
    } else {
      out << format_fixed(100.0 * r.best_eval_acc, 2);
    }
    out << '\n';
  }
}

}  // namespace symfs
