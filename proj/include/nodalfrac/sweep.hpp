#pragma once

#include <string>
#include <vector>

#include "nodalfrac/fit.hpp"

namespace nodalfrac {

/// One tracked eigen-level across a parameter sweep.
struct LevelSeries {
  int level = 1;                    // 1-based eigenvalue index
  std::vector<double> eigenvalues;  // one per parameter value
  std::vector<double> values;       // swept quantity (norm, splitting, ...)
  std::vector<int> changes;         // sign-change counts, -1 when not computed
  SlopeFit fit;                     // log-log fit of values vs parameter
  bool fitted = false;
};

/// Parameter sweep (delta or eps) with per-level records and fitted slopes.
/// Parameters are strictly decreasing; every record shares grid_cells.
struct SweepResult {
  std::string parameter_name;
  std::string quantity;
  int grid_cells = 0;
  std::vector<double> parameters;
  std::vector<LevelSeries> levels;
  std::vector<std::string> flags;

  void validate() const;
  const LevelSeries& level(int index) const;
};

// Sorts a parameter list into strictly decreasing order; rejects
// non-positive or repeated values.
std::vector<double> decreasing_parameters(std::vector<double> values);

// Geometric list from `hi` down to `lo` with `per_decade` points per decade.
std::vector<double> geometric_sweep(double hi, double lo, int per_decade);

}  // namespace nodalfrac
