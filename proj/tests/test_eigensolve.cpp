#include <doctest.h>

#include <cmath>
#include <random>

#include "nodalfrac/discretize.hpp"
#include "nodalfrac/eigensolve.hpp"
#include "nodalfrac/error.hpp"
#include "nodalfrac/matmodel.hpp"

using namespace nodalfrac;
using namespace nodalfrac::discretize;

TEST_CASE("3x3 embedding agrees with the matrix model") {
  const auto m = matmodel::assemble_reduced(1, 2, 3, -3, -1, -2);
  const Domain d({{-1, -0.5}, {-0.25, 0.25}, {0.5, 1}});
  const auto g = build_grid(d, 4);  // two cells per component
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(6, 6);
  // Block-constant embedding: each 2x2 block carries M_ij / 2, so constant
  // vectors on components reproduce M; the differences sit at 100.
  const Eigen::Matrix2d flip = Eigen::Matrix2d::Identity() - Eigen::Matrix2d::Constant(0.5);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) big.block(2 * i, 2 * j, 2, 2).setConstant(m.matrix()(i, j) / 2);
    big.block(2 * i, 2 * i, 2, 2) += 100 * flip;
  }
  const auto sp = eig::solve_lowest(big, g, 3);
  const auto ref = matmodel::eigendecompose(m);
  for (int j = 0; j < 3; ++j) CHECK(sp.pairs[j].lambda == doctest::Approx(ref.values(j)).epsilon(1e-10));
  const auto shifted = eig::solve_lowest(Eigen::MatrixXd(big + 2.5 * Eigen::MatrixXd::Identity(6, 6)), g, 3);
  for (int j = 0; j < 3; ++j) CHECK(shifted.pairs[j].lambda == doctest::Approx(ref.values(j) + 2.5).epsilon(1e-10));
}

TEST_CASE("quadrature") {
  const auto g = build_grid(Domain::interval(-1, 1), 50);
  const auto n = static_cast<Eigen::Index>(g.size());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
  CHECK(eig::l2_norm(one, g) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = g.nodes[static_cast<std::size_t>(i)];
  const double err = std::abs(eig::l2_inner(x, x, g) - 2.0 / 3.0);
  CHECK(err < 1e-3);
  const auto g2 = build_grid(Domain::interval(-1, 1), 100);
  Eigen::VectorXd x2(static_cast<Eigen::Index>(g2.size()));
  for (Eigen::Index i = 0; i < x2.size(); ++i) x2(i) = g2.nodes[static_cast<std::size_t>(i)];
  CHECK(std::abs(eig::l2_inner(x2, x2, g2) - 2.0 / 3.0) == doctest::Approx(err / 4).epsilon(1e-6));

  // Piecewise-constant functions integrate exactly.
  Eigen::VectorXd step(n);
  for (Eigen::Index i = 0; i < n; ++i) step(i) = x(i) < 0 ? 2.0 : -1.0;
  CHECK(eig::l2_inner(step, step, g) == doctest::Approx(5.0).epsilon(1e-14));
  const std::vector<bool> all(g.size(), true);
  CHECK(eig::lp_norm(step, g, all, 4) == doctest::Approx(std::pow(17.0, 0.25)).epsilon(1e-14));
  CHECK(eig::l2_norm(one, g, Domain::interval(0, 1)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("interval eigenpairs") {
  const auto g = build_grid(Domain::interval(-1, 1), 100);
  const auto op = assemble_fractional(g, 0.5);
  const auto sp = eig::solve_lowest(op, 6);
  REQUIRE(sp.pairs.size() == 6);
  for (std::size_t j = 0; j < 6; ++j) {
    const auto& p = sp.pairs[j];
    CHECK(eig::l2_norm(p.u, g) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.residual <= 1e-10 * sp.operator_norm);
    CHECK(eig::rayleigh_quotient(op.matrix, p.u, g) == doctest::Approx(p.lambda).epsilon(1e-10));
    for (std::size_t k = 0; k < j; ++k) CHECK(std::abs(eig::l2_inner(p.u, sp.pairs[k].u, g)) <= 1e-10);
    if (j > 0) CHECK(p.lambda > sp.pairs[j - 1].lambda);
    const auto rep = eig::nodal_report(p, g);
    CHECK(rep.whole.changes == static_cast<int>(j));
  }
  CHECK((sp.pairs[0].u.array() > 0).all());

  std::mt19937_64 rng(21);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd v(sp.pairs[0].u.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
    CHECK(eig::rayleigh_quotient(op.matrix, v, g) >= sp.pairs[0].lambda * (1 - 1e-12));
  }
  CHECK_THROWS_AS(eig::solve_lowest(op, 1000), InputError);
  CHECK_THROWS_AS(eig::solve_lowest(op, 0), InputError);
}

TEST_CASE("well ground state is one-signed on every component") {
  const IntervalUnion u({-0.5, 0.0, 0.5}, 0.05);
  const auto g = build_grid(IntervalUnion::enclosing(), 200);
  const auto op = add_potential(assemble_fractional(g, 0.5), PotentialSpec::finite(u, {0, 0, 0}, 1e-3));
  const auto sp = eig::solve_lowest(op, 2);
  CHECK((sp.pairs[0].u.array() > 0).all());
  CHECK(eig::nodal_report(sp.pairs[0], g).whole.changes == 0);
  CHECK(eig::nodal_report(sp.pairs[1], g).whole.changes == 1);
}
