#include "nodalfrac/fit.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <string>

#include "nodalfrac/error.hpp"

namespace nodalfrac {

SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y, double confidence) {
  require(x.size() == y.size(), "fit_loglog: size mismatch");
  require(x.size() >= 2, "fit_loglog: need at least two points");
  const std::size_t n = x.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    require(x[i] > 0 && y[i] > 0, "fit_loglog: non-positive value at index " + std::to_string(i));
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  require(sxx > 0, "fit_loglog: abscissae coincide");

  SlopeFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.ci_low = fit.ci_high = fit.slope;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = std::log(y[i]) - (fit.intercept + fit.slope * std::log(x[i]));
      rss += r * r;
    }
    fit.standard_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    boost::math::students_t dist(static_cast<double>(n - 2));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.5 * (1.0 - confidence)));
    fit.ci_low = fit.slope - t * fit.standard_error;
    fit.ci_high = fit.slope + t * fit.standard_error;
  }
  return fit;
}

}  // namespace nodalfrac
