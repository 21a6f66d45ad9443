#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nodalfrac::cli {

enum ExitCode : int { kPass = 0, kInputError = 1, kInconclusive = 2, kRefuted = 3 };

/// Parameters shared by every experiment. Field names are the config keys.
struct ExperimentConfig {
  std::string command;
  std::filesystem::path out = "nodalfrac_out";
  std::optional<int> grid;  // --grid: scan size for matmodel-scan, grid_n otherwise
  std::uint64_t seed = 20240601;
  bool json = false;

  double s = 0.5;
  std::vector<double> centers{-0.5, 0.0, 0.5};
  double eps = 0.05;
  std::vector<double> V{0.0, 50.0, 0.0};
  double delta = 1e-4;
  std::vector<double> delta_list;  // empty: 1e-1 .. 1e-5, two per decade
  std::vector<double> eps_list;    // empty: 2^-4 .. 2^-9
  int grid_n = 400;
  double v2_factor = 50.0;
  double tau_rel = 1e-8;
  double a = -0.7, b = -0.6, c = -0.8;
  int m = 5;
  std::optional<double> p;     // L^p exponent of the split check
  std::string form = "published";
};

// Parses JSON (leading '{') or key=value lines ('#' comments, comma lists)
// onto cfg. Throws InputError on unknown keys or bad values.
void apply_config_text(ExperimentConfig& cfg, const std::string& text);

// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace nodalfrac::cli
