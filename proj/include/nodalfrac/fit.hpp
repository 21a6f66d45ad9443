#pragma once

#include <cstddef>
#include <span>

namespace nodalfrac {

/// Least-squares line through (log x, log y).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double standard_error = 0.0;
  double ci_low = 0.0;   ///< two-sided confidence band on the slope
  double ci_high = 0.0;
  std::size_t points = 0;
};

// Requires at least two points with x, y > 0. With exactly two points the
// band collapses onto the slope.
SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y,
                    double confidence = 0.95);

}  // namespace nodalfrac
