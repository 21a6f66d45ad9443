#include <doctest.h>

#include <cmath>

#include "nodalfrac/error.hpp"
#include "nodalfrac/perturb.hpp"
#include "nodalfrac/wells.hpp"
#include "oracles.hpp"

using namespace nodalfrac;
using namespace nodalfrac::perturb;

namespace {

RescaledSystem three_wells(double eps, CouplingForm form = CouplingForm::published) {
  RescaledSystem sys;
  sys.centers = {-0.5, 0.0, 0.5};
  sys.V = {1.0, -2.0, 0.5};
  sys.eps = eps;
  sys.cells = 32;
  sys.form = form;
  return sys;
}

}  // namespace

TEST_CASE("eps = 0 gives a k-fold degenerate ground state") {
  auto sys = three_wells(0.0);
  const auto ref = reference_state(sys.s, sys.cells);
  const auto sp = solve_block(assemble_rescaled(sys), 4);
  for (int j = 0; j < 3; ++j) CHECK(sp.values[j] == doctest::Approx(ref->lambda0).epsilon(1e-12));
  CHECK(sp.values[3] > ref->lambda0 * (1 + 1e-3));
}

TEST_CASE("single well shifts by eps^{1+2s} V") {
  RescaledSystem sys;
  sys.centers = {0.0};
  sys.V = {3.0};
  sys.eps = 0.1;
  sys.cells = 32;
  const auto ref = reference_state(sys.s, sys.cells);
  const auto sp = solve_block(assemble_rescaled(sys), 1);
  CHECK(sp.values[0] == doctest::Approx(ref->lambda0 + std::pow(0.1, 2.0) * 3.0).epsilon(1e-12));
  CHECK(to_original_frame(sp.values[0], 0.1, 0.5) == doctest::Approx(sp.values[0] / 0.1));
}

TEST_CASE("rescaled operator is symmetric and rejects overlapping wells") {
  const auto op = assemble_rescaled(three_wells(1e-2));
  CHECK((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(op.k == 3);
  CHECK(op.block == 32);
  CHECK_THROWS_AS(assemble_rescaled(three_wells(0.3)), InputError);
  auto bad = three_wells(1e-2);
  bad.s = {3, 2};
  CHECK_THROWS_AS(assemble_rescaled(bad), InputError);
}

TEST_CASE("restricted form is the rescaled infinite-well operator on the union") {
  const double eps = 0.0625;
  auto sys = three_wells(eps, CouplingForm::restricted);
  const auto block = assemble_rescaled(sys);

  // 512 cells on (-1, 1) put 32 cells in each well of half width 1/16.
  wells::WellSystem ws({discretize::IntervalUnion(sys.centers, eps), sys.V, 0.5, 512});
  const auto inf = ws.infinite_operator();
  REQUIRE(inf.size() == block.matrix.rows());
  const Eigen::MatrixXd expect = eps * (inf.matrix - inf.potential.asDiagonal().toDenseMatrix() +
                                        eps * inf.potential.asDiagonal().toDenseMatrix());
  CHECK((block.matrix - expect).cwiseAbs().maxCoeff() <= 1e-10 * expect.cwiseAbs().maxCoeff());
}

TEST_CASE("correction matrix") {
  const auto sys = three_wells(1e-2);
  const auto ref = reference_state(sys.s, sys.cells);
  const auto mh = assemble_Mhat(sys);
  const double c = discretize::fractional_constant(0.5);
  const double ubar = ref->mean;
  CHECK((mh.M - mh.M.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mh.M(0, 1) == doctest::Approx(-4 * c * ubar * ubar / 0.25));
  CHECK(mh.M(0, 2) == doctest::Approx(-4 * c * ubar * ubar / 1.0));
  CHECK(mh.M(1, 1) == doctest::Approx(-2.0 + 2 * c * (4 + 4)));
  CHECK(mh.M(0, 0) == doctest::Approx(1.0 + 2 * c * (4 + 1)));

  const auto restricted = assemble_Mhat(three_wells(1e-2, CouplingForm::restricted));
  CHECK(restricted.M(1, 1) == doctest::Approx(-2.0));
  CHECK(restricted.M(0, 1) == doctest::Approx(mh.M(0, 1)));

  const auto roots = oracle::cubic_eigenvalues(Eigen::Matrix3d(mh.M));
  for (int j = 0; j < 3; ++j) CHECK(mh.eigen.values(j) == doctest::Approx(roots[j]).epsilon(1e-12));
  const Eigen::VectorXd g = mh.eigen.vectors.col(0);
  CHECK(((g.array() > 0).all() || (g.array() < 0).all()));
}

TEST_CASE("splitting approaches eps^{1+2s} times the correction eigenvalues") {
  auto sys = three_wells(0.0, CouplingForm::restricted);
  sys.cells = 64;
  const auto fit = splitting_fit(sys, {1.0 / 64, 1.0 / 128, 1.0 / 256});
  REQUIRE(fit.final_relative_error.size() == 3);
  for (double e : fit.final_relative_error) CHECK(e < 1e-2);
  for (int j = 1; j <= 3; ++j) CHECK(fit.sweep.level(j).fit.slope == doctest::Approx(2.0).epsilon(2e-2));
  for (double spread : fit.lambda0_spread) CHECK(spread < 1e-12);
}
