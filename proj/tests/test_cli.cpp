#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "nodalfrac/error.hpp"

namespace fs = std::filesystem;
using nodalfrac::cli::run;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("nodalfrac_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("config parsing") {
  nodalfrac::cli::ExperimentConfig cfg;
  nodalfrac::cli::apply_config_text(cfg, "# comment\ns = 0.25\ncenters = -0.4, 0.4\nV=1,2\n");
  CHECK(cfg.s == 0.25);
  CHECK(cfg.centers == std::vector<double>{-0.4, 0.4});
  CHECK(cfg.V == std::vector<double>{1, 2});
  nodalfrac::cli::apply_config_text(cfg, R"({"eps": 0.02, "grid_n": 100, "form": "restricted"})");
  CHECK(cfg.eps == 0.02);
  CHECK(cfg.grid_n == 100);
  CHECK(cfg.form == "restricted");
  CHECK_THROWS_AS(nodalfrac::cli::apply_config_text(cfg, "bogus = 1\n"), nodalfrac::InputError);
  CHECK_THROWS_AS(nodalfrac::cli::apply_config_text(cfg, "s = abc\n"), nodalfrac::InputError);
}

TEST_CASE("input errors exit 1 and leave only the summary") {
  CHECK(run({"no-such-command"}) == 1);
  const auto dir = fresh_dir("bad");
  fs::create_directories(dir);
  const auto cfg = dir / "cfg.txt";
  std::ofstream(cfg) << "delta = -1\n";
  const auto out = dir / "out";
  CHECK(run({"counterexample", "--config", cfg.string(), "--out", out.string()}) == 1);
  REQUIRE(fs::exists(out / "summary.json"));
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) files += e.is_regular_file();
  CHECK(files == 1);
  CHECK(slurp(out / "summary.json").find("\"exit_code\": 1") != std::string::npos);
}

TEST_CASE("runs are deterministic") {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  const int ra = run({"matmodel-scan", "--grid", "21", "--out", a.string()});
  const int rb = run({"matmodel-scan", "--grid", "21", "--out", b.string()});
  CHECK(ra == rb);
  for (const char* f : {"phase_scan.csv", "sensitivity.csv"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "phase_scan.csv").rfind("X,Z,lambda2,changes,pattern\n", 0) == 0);
}

TEST_CASE("spectrum command writes eigenpairs") {
  const auto out = fresh_dir("spec");
  CHECK(run({"spectrum", "--grid", "100", "--out", out.string()}) == 0);
  CHECK(fs::exists(out / "grid.csv"));
  CHECK(fs::exists(out / "eigenpair_1.csv"));
  CHECK(fs::exists(out / "eigenpair_1.json"));
  CHECK(fs::exists(out / "summary.json"));
}
