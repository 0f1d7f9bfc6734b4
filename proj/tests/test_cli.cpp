#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "symfs/cli.hpp"
#include "symfs/error.hpp"

namespace fs = std::filesystem;
using symfs::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "symfs");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

// Fresh output directory under the test working directory.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path) << text;
}

// Small, fast training workload shared by the train tests.
std::vector<std::string> tiny_train(const fs::path& out) {
  return {"train", "--head", "symmetric", "--dataset", "blobs:4x8", "--per-class", "20", "--widths", "8",
          "--epochs", "4", "--batch-size", "16", "--out", out.string()};
}

}  // namespace

TEST_CASE("missing or unknown subcommand is a usage error") {
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"refute", "--no-such-flag", "1"}).code == 2);
}

TEST_CASE("help exits cleanly") {
  const auto r = call({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("verify-lemmas") != std::string::npos);
}

TEST_CASE("verify-lemmas exit codes") {
  const fs::path dir = scratch("lemmas");
  const auto ok = call({"verify-lemmas", "--n-max", "6", "--trials", "3", "--out", dir.string()});
  CHECK(ok.code == 0);
  const auto lines = read_lines(dir / "lemmas.csv");
  REQUIRE_FALSE(lines.empty());
  CHECK(lines[0] == "lemma,n,d,trial,residual,pass");
  CHECK(lines.size() == 1 + 3 * 4 * 4 * 3);
  CHECK(fs::exists(dir / "manifest"));

  CHECK(call({"verify-lemmas", "--n-max", "6", "--trials", "3", "--tol", "1e-18", "--out", dir.string()}).code == 1);
  CHECK(call({"verify-lemmas", "--n-min", "2", "--out", dir.string()}).code == 2);
  CHECK(call({"verify-lemmas", "--n-min", "8", "--n-max", "5", "--out", dir.string()}).code == 2);
}

TEST_CASE("analyze reports divergence") {
  const fs::path dir = scratch("analyze");
  const auto sym = call({"analyze", "--weights", "symmetric:10", "--sigma", "1", "--out", dir.string()});
  REQUIRE(sym.code == 0);
  const auto pos = sym.out.find("max_divergence_deg=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(sym.out.substr(pos + 19)) <= 0.02);
  CHECK(read_lines(dir / "sweep.csv").size() == 3601);
  CHECK(read_lines(dir / "divergence.csv").size() == 11);

  const auto asym = call({"analyze", "--weights", "angles:0,30,180", "--out", dir.string()});
  REQUIRE(asym.code == 0);
  CHECK(std::stod(asym.out.substr(asym.out.find('=') + 1)) > 0.5);

  CHECK(call({"analyze", "--resolution", "0", "--out", dir.string()}).code == 2);
  CHECK(call({"analyze", "--weights", "hexagon:6", "--out", dir.string()}).code == 2);
  CHECK(call({"analyze", "--weights", "symmetric:2", "--out", dir.string()}).code == 2);
}

TEST_CASE("refute writes positive rows") {
  const fs::path dir = scratch("refute");
  REQUIRE(call({"refute", "--n-max", "64", "--out", dir.string()}).code == 0);
  const auto lines = read_lines(dir / "refute.csv");
  REQUIRE(lines.size() == 63);
  CHECK(lines[0] == "n,value,positive");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    CHECK(std::stod(cells[1]) > 0.0);
    CHECK(cells[2] == "1");
  }
  CHECK(std::stod(split_csv(lines[1])[1]) == doctest::Approx(1.9532).epsilon(1e-4));
  CHECK(call({"refute", "--n-max", "2", "--out", dir.string()}).code == 2);
}

TEST_CASE("train writes manifest, run log, monitor and checkpoint") {
  const fs::path dir = scratch("train");
  const auto r = call(tiny_train(dir));
  REQUIRE(r.code == 0);
  for (const char* f : {"manifest", "runlog.csv", "monitor.csv", "head.bin"}) CHECK(fs::exists(dir / f));

  const auto runlog = read_lines(dir / "runlog.csv");
  REQUIRE(runlog.size() == 5);
  CHECK(runlog[0] == "epoch,train_loss,train_acc,eval_loss,eval_acc,plane_delta_deg,seconds");

  // Learning rate drops at ceil(0.5 E) = 2 and ceil(0.75 E) = 3.
  const auto monitor = read_lines(dir / "monitor.csv");
  REQUIRE(monitor.size() == 5);
  std::vector<double> lr;
  for (std::size_t i = 1; i < monitor.size(); ++i) lr.push_back(std::stod(split_csv(monitor[i])[1]));
  CHECK(lr[0] == doctest::Approx(0.1));
  CHECK(lr[1] == doctest::Approx(0.1));
  CHECK(lr[2] == doctest::Approx(0.01));
  CHECK(lr[3] == doctest::Approx(0.001));

  const auto manifest = symfs::cli::read_key_value_file(dir / "manifest");
  CHECK(manifest.at("head") == "symmetric");
  CHECK(manifest.at("epochs") == "4");
  CHECK(manifest.at("seed") == "1");
  CHECK(manifest.count("lr") == 1);
}

TEST_CASE("rerunning from a manifest reproduces the loss columns") {
  const fs::path first = scratch("repro_a"), second = scratch("repro_b");
  REQUIRE(call(tiny_train(first)).code == 0);
  REQUIRE(call({"train", "--config", (first / "manifest").string(), "--out", second.string()}).code == 0);
  const auto a = read_lines(first / "runlog.csv"), b = read_lines(second / "runlog.csv");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 1; i < a.size(); ++i) {
    const auto ca = split_csv(a[i]), cb = split_csv(b[i]);
    CHECK(ca[1] == cb[1]);
    CHECK(ca[3] == cb[3]);
  }
}

TEST_CASE("config file precedence: flags over file over defaults") {
  const fs::path dir = scratch("precedence");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg, "# comment\nepochs=3\nhead=fc\n\nper-class=20\ndataset=blobs:4x8\nwidths=8\n");

  REQUIRE(call({"train", "--config", cfg.string(), "--out", (dir / "a").string()}).code == 0);
  CHECK(read_lines(dir / "a" / "runlog.csv").size() == 4);
  CHECK(symfs::cli::read_key_value_file(dir / "a" / "manifest").at("head") == "fc");

  REQUIRE(call({"train", "--config", cfg.string(), "--epochs", "2", "--out", (dir / "b").string()}).code == 0);
  CHECK(read_lines(dir / "b" / "runlog.csv").size() == 3);
  CHECK(symfs::cli::read_key_value_file(dir / "b" / "manifest").at("epochs") == "2");
}

TEST_CASE("bad config files are usage errors") {
  const fs::path dir = scratch("badcfg");
  write_file(dir / "unknown.cfg", "epochs=2\ncolour=blue\n");
  write_file(dir / "malformed.cfg", "epochs 2\n");
  write_file(dir / "dup.cfg", "epochs=2\nepochs=3\n");
  for (const char* name : {"unknown.cfg", "malformed.cfg", "dup.cfg"}) {
    CAPTURE(name);
    CHECK(call({"train", "--config", (dir / name).string(), "--out", (dir / "o").string()}).code == 2);
  }
  CHECK(call({"train", "--config", (dir / "missing.cfg").string()}).code == 2);
  CHECK_THROWS_AS(symfs::cli::read_key_value_file(dir / "dup.cfg"), symfs::ConfigError);
}

TEST_CASE("train configuration errors") {
  const fs::path dir = scratch("train_err");
  auto args = tiny_train(dir);
  args[2] = "cosface";
  CHECK(call(args).code == 2);
  CHECK(call({"train", "--head", "sphereface", "--margin", "2.5", "--out", dir.string()}).code == 2);
  CHECK(call({"train", "--momentum", "1.5", "--out", dir.string()}).code == 2);
  CHECK(call({"train", "--dataset", "idx:/nonexistent/a,/nonexistent/b", "--out", dir.string()}).code == 2);
}

TEST_CASE("a diverging run is an outcome, not a tool failure") {
  const fs::path dir = scratch("diverge");
  auto args = tiny_train(dir);
  args[2] = "fc";
  args.insert(args.end(), {"--lr", "1e6"});
  const auto r = call(args);
  CHECK(r.code == 0);
  CHECK(r.out.find("diverged=yes") != std::string::npos);
}

TEST_CASE("stability grid table shape") {
  const fs::path dir = scratch("stability");
  const auto r = call({"stability", "--grid", "arcface:sigma=4,8,16,32,64:m=0.1", "--repeats", "3", "--dataset",
                       "blobs:4x8", "--per-class", "20", "--widths", "8", "--epochs", "2", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto lines = read_lines(dir / "stability.csv");
  REQUIRE(lines.size() == 16);
  CHECK(lines[0] == "kind,sigma,m,repeat,seed,best_eval_acc_or_x");
  CHECK(split_csv(lines[1])[0] == "arcface");
  CHECK(split_csv(lines[1])[1] == "4");
  CHECK(split_csv(lines[1])[2] == "0.1");
  const auto manifest = read_lines(dir / "manifest");
  bool seeds = false;
  for (const auto& l : manifest) seeds = seeds || l.starts_with("# repeat_seed.");
  CHECK(seeds);
}

TEST_CASE("bench rows") {
  const fs::path dir = scratch("bench");
  const auto r = call({"bench", "--repeats", "3", "--dataset", "blobs:4x8", "--per-class", "20", "--widths", "8",
                       "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto lines = read_lines(dir / "bench.csv");
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "kind,mean_sec,std_sec,repeats");
  const char* kinds[] = {"fc", "sphereface", "arcface", "symmetric"};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto cells = split_csv(lines[i + 1]);
    CHECK(cells[0] == kinds[i]);
    CHECK(std::stod(cells[2]) >= 0.0);
    CHECK(cells[3] == "3");
  }
  CHECK(call({"bench", "--repeats", "2", "--out", dir.string()}).code == 2);
}

TEST_CASE("expand_config places file entries before user flags") {
  const fs::path dir = scratch("expand");
  write_file(dir / "c.cfg", "epochs=7\n");
  const auto args = symfs::cli::expand_config({"symfs", "train", "--config", (dir / "c.cfg").string(), "--epochs", "2"});
  CHECK(args == std::vector<std::string>{"symfs", "train", "--epochs=7", "--epochs", "2"});

  write_file(dir / "empty.cfg", "widths=\n");
  const auto empty = symfs::cli::expand_config({"symfs", "train", "--config", (dir / "empty.cfg").string()});
  CHECK(empty == std::vector<std::string>{"symfs", "train", "--widths", ""});
}
