#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "nodalfrac/discretize.hpp"
#include "nodalfrac/eigensolve.hpp"
#include "nodalfrac/error.hpp"

using namespace nodalfrac;
using namespace nodalfrac::discretize;

namespace {

double min_eigenvalue(const DiscreteOperator& op) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

TEST_CASE("grid construction") {
  const auto g = build_grid(Domain::interval(-1, 1), 4);
  CHECK(g.size() == 8);
  CHECK(g.h() == doctest::Approx(0.25));
  CHECK(g.nodes.front() == doctest::Approx(-0.875));
  CHECK(g.measure() == doctest::Approx(2.0));

  const IntervalUnion u({-0.5, 0.0, 0.5}, 0.05);
  const auto wg = build_grid(u.domain(), 100);
  CHECK(wg.size() == 30);
  CHECK(wg.measure() == doctest::Approx(0.3));
  CHECK(wg.component[0] == 0);
  CHECK(wg.component[29] == 2);

  CHECK_THROWS_AS(build_grid(Domain::interval(-1, 1), 0.5), InputError);
  CHECK_THROWS_AS(IntervalUnion({-0.5, -0.45}, 0.05), InputError);
  CHECK_THROWS_AS(IntervalUnion({0.97}, 0.05), InputError);
  CHECK_THROWS_AS(Domain({{0, 1}, {0.5, 2}}), InputError);
}

TEST_CASE("normalization constant") {
  CHECK(fractional_constant(0.5) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
  const double s = 0.25;
  const double expect = s * std::pow(4.0, s) * std::tgamma(0.5 + s) / (std::sqrt(std::numbers::pi) * std::tgamma(1 - s));
  CHECK(fractional_constant(s) == doctest::Approx(expect).epsilon(1e-14));
  CHECK_THROWS_AS(fractional_constant(0.0), InputError);
  CHECK_THROWS_AS(fractional_constant(1.0), InputError);
}

TEST_CASE("cell kernel integral matches quadrature") {
  for (double s : {0.25, 0.5, 0.75}) {
    for (double d : {0.011, 0.1, 1.3}) {
      const double w = 0.02;
      const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [s](double t) { return std::pow(t, -1 - 2 * s); }, d - w / 2, d + w / 2, 10, 1e-14);
      CHECK(cell_kernel_integral(d, w, s) == doctest::Approx(q).epsilon(1e-11));
    }
  }
}

TEST_CASE("exterior kernel") {
  const auto d = Domain::interval(-1, 1);
  const double c = fractional_constant(0.5);
  CHECK(kappa(0.0, d, 0.5) == doctest::Approx(2 * c).epsilon(1e-14));
  double prev = kappa(0.0, d, 0.5);
  for (double x : {0.5, 0.9, 0.99, 0.999}) {
    const double k = kappa(x, d, 0.5);
    CHECK(k > prev);
    prev = k;
  }
  CHECK_THROWS_AS(kappa(1.5, d, 0.5), InputError);

  // s = 1/4 on a two-component domain against numerical integration.
  const Domain two({{-1, -0.2}, {0.3, 1}});
  const double s = 0.25, x = 0.5, cs = fractional_constant(s);
  const auto f = [&](double y) { return std::pow(std::abs(x - y), -1 - 2 * s); };
  boost::math::quadrature::exp_sinh<double> tail;
  const double outer = tail.integrate([&](double t) { return f(1 + t); }) +
                       tail.integrate([&](double t) { return f(-1 - t); });
  const double gap = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -0.2, 0.3, 10, 1e-15);
  CHECK(kappa(x, two, s) == doctest::Approx(cs * (outer + gap)).epsilon(1e-10));
}

TEST_CASE("operator structure") {
  const auto g = build_grid(Domain::interval(-1, 1), 50);
  for (double s : {0.25, 0.5, 0.75}) {
    const auto op = assemble_fractional(g, s);
    CHECK(op.symmetry_defect() == 0.0);
    CHECK(min_eigenvalue(op) > 0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.size()));
    const Eigen::VectorXd a1 = op.matrix * ones;
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(a1(static_cast<Eigen::Index>(i)) == doctest::Approx(kappa(g.nodes[i], g.domain, s)).epsilon(1e-10));
  }
}

TEST_CASE("consistency with an exact image") {
  // (-Delta)^{1/2} of (1 - x^2)_+ on (-1, 1) is c (4 + 2x log((1-x)/(1+x))), c = 1/pi.
  const double c = fractional_constant(0.5);
  double prev = 1e300;
  for (double n : {25.0, 50.0, 100.0, 200.0}) {
    const auto g = build_grid(Domain::interval(-1, 1), n);
    const auto op = assemble_fractional(g, 0.5);
    Eigen::VectorXd u(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) u(static_cast<Eigen::Index>(i)) = 1 - g.nodes[i] * g.nodes[i];
    const Eigen::VectorXd au = op.matrix * u;
    double err = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.nodes[i];
      if (std::abs(x) > 0.5) continue;
      const double exact = c * (4 + 2 * x * std::log((1 - x) / (1 + x)));
      err = std::max(err, std::abs(au(static_cast<Eigen::Index>(i)) - exact));
    }
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("first eigenvalue converges to the known value for s = 1/2") {
  std::vector<double> lam;
  for (double n : {100.0, 200.0, 400.0}) {
    const auto op = assemble_fractional(build_grid(Domain::interval(-1, 1), n), 0.5);
    lam.push_back(min_eigenvalue(op));
  }
  const double rich = lam[2] + (lam[2] - lam[1]) * (lam[2] - lam[1]) / ((lam[1] - lam[0]) - (lam[2] - lam[1]));
  CHECK(std::abs(rich - 1.1577738) < 2e-4);
  CHECK(lam[0] < lam[1]);
  CHECK(lam[1] < lam[2]);
}

TEST_CASE("scaling of the domain") {
  const double s = 0.5;
  const auto base = assemble_fractional(build_grid(Domain::interval(-1, 1), 20), s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e0(base.matrix, Eigen::EigenvaluesOnly);
  for (double r : {0.5, 2.0}) {
    const auto op = assemble_fractional(build_grid(Domain::interval(-r, r), 20 / r), s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(op.matrix, Eigen::EigenvaluesOnly);
    for (int j = 0; j < 5; ++j)
      CHECK(e1.eigenvalues()(j) == doctest::Approx(e0.eigenvalues()(j) * std::pow(r, -2 * s)).epsilon(1e-10));
  }
}

TEST_CASE("potentials") {
  const IntervalUnion u({-0.5, 0.0, 0.5}, 0.05);
  const auto g = build_grid(IntervalUnion::enclosing(), 100);
  const auto op = assemble_fractional(g, 0.5);

  const auto zero = add_potential(op, PotentialSpec::finite(u, {0, 0, 0}, 1e300));
  CHECK((zero.matrix - op.matrix).cwiseAbs().maxCoeff() <= 1e-290);

  const auto barrier = add_potential(op, PotentialSpec::finite(u, {0, 0, 0}, 1e-3));
  const auto in = g.cells_in(u.domain());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    CHECK(barrier.matrix(k, k) - op.matrix(k, k) == doctest::Approx(in[i] ? 0.0 : 1e3));
  }

  const auto wells = add_potential(op, PotentialSpec::finite(u, {2, 2, 2}, 1e-3));
  const auto idx = static_cast<Eigen::Index>(g.size() / 2);
  CHECK(wells.matrix(idx, idx) - op.matrix(idx, idx) == doctest::Approx(2.0));

  const auto inf = add_potential(op, PotentialSpec::infinite(u, {0, 0, 0}));
  const auto direct = assemble_fractional(g.restrict_to(u.domain()), 0.5);
  REQUIRE(inf.size() == direct.size());
  CHECK((inf.matrix - direct.matrix).cwiseAbs().maxCoeff() <= 1e-12 * direct.matrix.cwiseAbs().maxCoeff());

  const IntervalUnion off({-0.5, 0.0, 0.5}, 0.053);
  CHECK_THROWS_AS(g.cells_in(off.domain()), InputError);
  CHECK_THROWS_AS(PotentialSpec::finite(u, {0, 0, 0}, -1.0).validate(), InputError);
  CHECK_THROWS_AS(PotentialSpec::finite(u, {0, 0}, 1.0).validate(), InputError);
}

TEST_CASE("binary round trip") {
  const auto op = assemble_fractional(build_grid(Domain::interval(-1, 1), 10), 0.3);
  std::stringstream ss;
  op.write_binary(ss);
  const auto back = DiscreteOperator::read_binary(ss);
  CHECK(back.s == op.s);
  CHECK(back.matrix == op.matrix);
  CHECK(back.grid.nodes.size() == op.grid.nodes.size());
  for (std::size_t i = 0; i < op.grid.size(); ++i) CHECK(back.grid.nodes[i] == doctest::Approx(op.grid.nodes[i]));
  std::stringstream bad("NOTANOP!");
  CHECK_THROWS_AS(DiscreteOperator::read_binary(bad), InputError);
}
