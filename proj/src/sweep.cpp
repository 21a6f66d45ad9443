#include "nodalfrac/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nodalfrac/error.hpp"

namespace nodalfrac {

void SweepResult::validate() const {
  for (std::size_t i = 1; i < parameters.size(); ++i)
    require(parameters[i] < parameters[i - 1], "sweep parameters must be strictly decreasing");
  for (const auto& lv : levels) {
    require(lv.values.size() == parameters.size(), "sweep level has wrong record count");
  }
}

const LevelSeries& SweepResult::level(int index) const {
  for (const auto& lv : levels)
    if (lv.level == index) return lv;
  throw InputError("sweep has no level " + std::to_string(index));
}

std::vector<double> decreasing_parameters(std::vector<double> values) {
  require(!values.empty(), "empty parameter list");
  for (double v : values) require(v > 0 && std::isfinite(v), "sweep parameters must be positive");
  std::sort(values.begin(), values.end(), std::greater<>());
  for (std::size_t i = 1; i < values.size(); ++i)
    require(values[i] < values[i - 1], "repeated sweep parameter");
  return values;
}

std::vector<double> geometric_sweep(double hi, double lo, int per_decade) {
  require(hi > lo && lo > 0 && per_decade > 0, "geometric_sweep: need hi > lo > 0");
  const double decades = std::log10(hi / lo);
  const int steps = static_cast<int>(std::lround(decades * per_decade));
  std::vector<double> out;
  for (int i = 0; i <= steps; ++i) out.push_back(hi * std::pow(10.0, -static_cast<double>(i) / per_decade));
  return out;
}

}  // namespace nodalfrac
