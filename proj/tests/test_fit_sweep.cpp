#include <doctest.h>

#include <cmath>
#include <vector>

#include "nodalfrac/error.hpp"
#include "nodalfrac/fit.hpp"
#include "nodalfrac/sweep.hpp"

using namespace nodalfrac;

TEST_CASE("exact power law") {
  std::vector<double> x, y;
  for (int i = 0; i < 6; ++i) {
    x.push_back(std::pow(0.5, i));
    y.push_back(3.0 * std::pow(x.back(), 1.5));
  }
  const auto f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.ci_high - f.ci_low <= 1e-10);
  CHECK(f.points == 6);
}

TEST_CASE("noisy fit band contains the slope") {
  const std::vector<double> x{1, 2, 4, 8, 16};
  const std::vector<double> y{1.1, 1.9, 4.3, 7.6, 16.5};
  const auto f = fit_loglog(x, y);
  CHECK(f.ci_low < f.slope);
  CHECK(f.slope < f.ci_high);
  CHECK(f.ci_low < 1.0);
  CHECK(1.0 < f.ci_high);
}

TEST_CASE("fit errors") {
  const std::vector<double> one{1}, two{1, 2}, bad{1, -2}, same{2, 2};
  CHECK_THROWS_AS(fit_loglog(one, one), InputError);
  CHECK_THROWS_AS(fit_loglog(two, bad), InputError);
  CHECK_THROWS_AS(fit_loglog(same, two), InputError);
  CHECK_THROWS_AS(fit_loglog(two, one), InputError);
}

TEST_CASE("parameter lists") {
  const auto d = decreasing_parameters({1e-3, 1e-1, 1e-2});
  CHECK(d == std::vector<double>{1e-1, 1e-2, 1e-3});
  CHECK_THROWS_AS(decreasing_parameters({1e-1, 1e-1}), InputError);
  CHECK_THROWS_AS(decreasing_parameters({1e-1, 0.0}), InputError);
  const auto g = geometric_sweep(1e-1, 1e-5, 2);
  CHECK(g.size() == 9);
  CHECK(g.front() == doctest::Approx(1e-1));
  CHECK(g.back() == doctest::Approx(1e-5));
  SweepResult r;
  CHECK_THROWS_AS(r.level(1), InputError);
}
