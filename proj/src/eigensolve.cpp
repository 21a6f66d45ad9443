#include "nodalfrac/eigensolve.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "nodalfrac/error.hpp"

namespace nodalfrac::eig {

namespace {

void check_sampled(const Eigen::VectorXd& u, const discretize::UniformGrid& grid, const char* who) {
  require(static_cast<std::size_t>(u.size()) == grid.size(),
          std::string(who) + ": function is not sampled on this grid");
}

void fix_sign(Eigen::VectorXd& u, const discretize::UniformGrid& grid) {
  double mean = 0, mass = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (grid.component[static_cast<std::size_t>(i)] != 0) continue;
    const double h = grid.widths[static_cast<std::size_t>(i)];
    mean += h * u(i);
    mass += h * std::abs(u(i));
  }
  if (std::abs(mean) > 1e-10 * mass) {
    if (mean < 0) u = -u;
    return;
  }
  Eigen::Index peak = 0;
  u.cwiseAbs().maxCoeff(&peak);
  if (u(peak) < 0) u = -u;
}

}  // namespace

Spectrum solve_lowest(const discretize::DiscreteOperator& op, int m) {
  return solve_lowest(op.matrix, op.grid, m);
}

Spectrum solve_lowest(const Eigen::MatrixXd& symmetric, const discretize::UniformGrid& grid, int m) {
  const Eigen::Index n = symmetric.rows();
  require(n > 0 && symmetric.cols() == n, "solve_lowest: matrix must be square");
  require(static_cast<std::size_t>(n) == grid.size(), "solve_lowest: matrix and grid sizes differ");
  require(m >= 1 && m <= n, "solve_lowest: requested count exceeds the matrix size");
  require(symmetric.allFinite(), "solve_lowest: matrix has non-finite entries");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) throw NumericalError("solve_lowest: eigensolver did not converge");
  const Eigen::VectorXd& values = solver.eigenvalues();

  Spectrum out;
  out.operator_norm = std::max(std::abs(values(0)), std::abs(values(n - 1)));
  out.pairs.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd e = solver.eigenvectors().col(j);
    EigenPair p;
    p.lambda = values(j);
    p.residual = (symmetric * e - p.lambda * e).norm();
    double norm2 = 0;
    for (Eigen::Index i = 0; i < n; ++i) norm2 += grid.widths[static_cast<std::size_t>(i)] * e(i) * e(i);
    p.u = e / std::sqrt(norm2);
    fix_sign(p.u, grid);
    out.pairs.push_back(std::move(p));
  }
  return out;
}

double l2_norm(const Eigen::VectorXd& u, const discretize::UniformGrid& grid) {
  return std::sqrt(l2_inner(u, u, grid));
}

double l2_norm(const Eigen::VectorXd& u, const discretize::UniformGrid& grid,
               const discretize::Domain& region) {
  check_sampled(u, grid, "l2_norm");
  const std::vector<bool> mask = grid.cells_in(region);
  double sum = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (mask[i]) sum += grid.widths[i] * u(static_cast<Eigen::Index>(i)) * u(static_cast<Eigen::Index>(i));
  return std::sqrt(sum);
}

double l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const discretize::UniformGrid& grid) {
  check_sampled(u, grid, "l2_inner");
  check_sampled(v, grid, "l2_inner");
  double sum = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    sum += grid.widths[i] * u(static_cast<Eigen::Index>(i)) * v(static_cast<Eigen::Index>(i));
  return sum;
}

double lp_norm(const Eigen::VectorXd& u, const discretize::UniformGrid& grid,
               const std::vector<bool>& mask, double p) {
  check_sampled(u, grid, "lp_norm");
  require(mask.size() == grid.size(), "lp_norm: mask size differs from grid");
  require(std::isfinite(p) && p >= 1, "lp_norm: exponent must be >= 1");
  // Scale by the peak so that large p does not underflow.
  double peak = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (mask[i]) peak = std::max(peak, std::abs(u(static_cast<Eigen::Index>(i))));
  if (peak == 0) return 0;
  double sum = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (mask[i]) sum += grid.widths[i] * std::pow(std::abs(u(static_cast<Eigen::Index>(i))) / peak, p);
  return peak * std::pow(sum, 1.0 / p);
}

double rayleigh_quotient(const Eigen::MatrixXd& a, const Eigen::VectorXd& u,
                         const discretize::UniformGrid& grid) {
  check_sampled(u, grid, "rayleigh_quotient");
  require(a.rows() == u.size() && a.cols() == u.size(), "rayleigh_quotient: size mismatch");
  const double den = l2_inner(u, u, grid);
  require(den > 0, "rayleigh_quotient: zero vector");
  const Eigen::VectorXd au = a * u;
  return l2_inner(u, au, grid) / den;
}

NodalReport nodal_report(const EigenPair& pair, const discretize::UniformGrid& grid, double tau_rel) {
  check_sampled(pair.u, grid, "nodal_report");
  NodalReport r;
  r.whole = matmodel::count_sign_changes(std::span<const double>(pair.u.data(), grid.size()), tau_rel);
  const std::size_t comps = grid.domain.components().size();
  if (comps <= 1) return r;
  for (std::size_t c = 0; c < comps; ++c) {
    std::vector<double> part;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (static_cast<std::size_t>(grid.component[i]) == c) part.push_back(pair.u(static_cast<Eigen::Index>(i)));
    // A component where the function vanishes identically has no sign changes.
    const bool all_zero = std::all_of(part.begin(), part.end(), [](double v) { return v == 0.0; });
    if (all_zero) {
      matmodel::SignChangeReport z;
      z.tolerance = tau_rel;
      z.pattern.assign(part.size(), matmodel::Sign::zero);
      r.per_component.push_back(std::move(z));
    } else {
      r.per_component.push_back(matmodel::count_sign_changes(part, tau_rel));
    }
  }
  return r;
}

void write_pair_csv(std::ostream& os, const EigenPair& pair, const discretize::UniformGrid& grid) {
  check_sampled(pair.u, grid, "write_pair_csv");
  os << "index,x,value\n";
  os.precision(17);
  for (std::size_t i = 0; i < grid.size(); ++i)
    os << i << ',' << grid.nodes[i] << ',' << pair.u(static_cast<Eigen::Index>(i)) << '\n';
}

void write_pair_json(std::ostream& os, const EigenPair& pair, const discretize::UniformGrid& grid,
                     double tau_rel) {
  const NodalReport r = nodal_report(pair, grid, tau_rel);
  nlohmann::ordered_json j;
  j["lambda"] = pair.lambda;
  j["residual"] = pair.residual;
  j["changes"] = r.whole.changes;
  os << j.dump(2) << '\n';
}

}  // namespace nodalfrac::eig
