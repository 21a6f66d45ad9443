#include "nodalfrac/wells.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nodalfrac/error.hpp"
#include "nodalfrac/parallel.hpp"

namespace nodalfrac::wells {

namespace {

// Exterior masses below this are at the quadrature / round-off floor.
constexpr double kMassFloor = 1e-13;

void validate_problem(const WellProblem& p) {
  require(p.V.size() == p.geometry.size(), "WellProblem: one potential value per well required");
  for (double v : p.V) require(std::isfinite(v), "WellProblem: non-finite potential value");
  require(p.s > 0 && p.s < 1, "WellProblem: s must lie in (0, 1)");
  require(p.grid_cells >= 8, "WellProblem: at least 8 cells on I");
}

void check_delta(double delta) {
  require(std::isfinite(delta) && delta > 0, "finite well: delta must be positive");
  require(delta >= kMinDelta, "finite well: delta below 1e-12 makes the barrier 1/delta swamp the "
                              "operator in double precision; use the infinite well instead");
}

}  // namespace

WellSystem::WellSystem(WellProblem problem) : problem_(std::move(problem)) {
  validate_problem(problem_);
  const auto grid = discretize::build_grid(discretize::IntervalUnion::enclosing(), 0.5 * problem_.grid_cells);
  base_ = discretize::assemble_fractional(grid, problem_.s);
  const discretize::Domain wells = problem_.geometry.domain();
  in_wells_ = grid.cells_in(wells);
  well_potential_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (in_wells_[i]) {
      well_nodes_.push_back(static_cast<int>(i));
      well_potential_(static_cast<Eigen::Index>(i)) =
          problem_.V[static_cast<std::size_t>(wells.locate(grid.nodes[i]))];
    } else {
      exterior_nodes_.push_back(static_cast<int>(i));
    }
  }
  well_grid_ = grid.restrict_to(wells);
}

discretize::DiscreteOperator WellSystem::infinite_operator() const {
  return discretize::add_potential(base_, discretize::PotentialSpec::infinite(problem_.geometry, problem_.V));
}

discretize::DiscreteOperator WellSystem::finite_operator(double delta) const {
  check_delta(delta);
  return discretize::add_potential(base_, discretize::PotentialSpec::finite(problem_.geometry, problem_.V, delta));
}

Eigen::VectorXd WellSystem::embed(const Eigen::VectorXd& on_wells) const {
  require(static_cast<std::size_t>(on_wells.size()) == well_nodes_.size(), "embed: size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid().size()));
  for (std::size_t a = 0; a < well_nodes_.size(); ++a) out(well_nodes_[a]) = on_wells(static_cast<Eigen::Index>(a));
  return out;
}

Eigen::VectorXd WellSystem::restrict_to_wells(const Eigen::VectorXd& on_interval) const {
  require(static_cast<std::size_t>(on_interval.size()) == grid().size(), "restrict_to_wells: size mismatch");
  Eigen::VectorXd out(static_cast<Eigen::Index>(well_nodes_.size()));
  for (std::size_t a = 0; a < well_nodes_.size(); ++a) out(static_cast<Eigen::Index>(a)) = on_interval(well_nodes_[a]);
  return out;
}

eig::Spectrum solve_infinite_well(const WellSystem& sys, int m) {
  return eig::solve_lowest(sys.infinite_operator(), m);
}

eig::Spectrum solve_finite_well(const WellSystem& sys, double delta, int m) {
  return eig::solve_lowest(sys.finite_operator(delta), m);
}

double energy(const WellSystem& sys, const Eigen::VectorXd& u) {
  require(static_cast<std::size_t>(u.size()) == sys.grid().size(), "energy: u must be sampled on the I-grid");
  const Eigen::VectorXd au = sys.base().matrix * u;
  double e = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double h = sys.grid().widths[static_cast<std::size_t>(i)];
    e += h * u(i) * (au(i) + sys.well_potential()(i) * u(i));
  }
  return e;
}

double energy_delta(const WellSystem& sys, const Eigen::VectorXd& u, double delta) {
  check_delta(delta);
  double barrier = 0;
  for (int i : sys.exterior_nodes()) barrier += sys.grid().widths[static_cast<std::size_t>(i)] * u(i) * u(i);
  return energy(sys, u) + barrier / delta;
}

namespace {

double exterior_l2(const WellSystem& sys, const Eigen::VectorXd& u) {
  double sum = 0;
  for (int i : sys.exterior_nodes()) sum += sys.grid().widths[static_cast<std::size_t>(i)] * u(i) * u(i);
  return std::sqrt(sum);
}

void fit_levels(SweepResult& sw) {
  for (auto& L : sw.levels) {
    if (sw.parameters.size() < 2) continue;
    if (!std::all_of(L.values.begin(), L.values.end(), [](double v) { return v > 0; })) {
      sw.flags.push_back("level " + std::to_string(L.level) + " has zero records, not fitted");
      continue;
    }
    L.fit = fit_loglog(sw.parameters, L.values);
    L.fitted = true;
  }
}

}  // namespace

SweepResult exterior_mass_sweep(const WellSystem& sys, std::vector<double> deltas, int m) {
  deltas = decreasing_parameters(std::move(deltas));
  for (double d : deltas) check_delta(d);
  require(m >= 1, "exterior_mass_sweep: at least one level");
  const auto spectra = parallel_map(deltas.size(), [&](std::size_t i) { return solve_finite_well(sys, deltas[i], m); });

  SweepResult sw;
  sw.parameter_name = "delta";
  sw.quantity = "L2 norm on I \\ U";
  sw.grid_cells = sys.problem().grid_cells;
  sw.levels.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) sw.levels[static_cast<std::size_t>(j)].level = j + 1;

  for (std::size_t d = 0; d < deltas.size(); ++d) {
    std::vector<double> mass;
    for (int j = 0; j < m; ++j) mass.push_back(exterior_l2(sys, spectra[d].pairs[static_cast<std::size_t>(j)].u));
    if (*std::min_element(mass.begin(), mass.end()) < kMassFloor) {
      std::ostringstream os;
      os << "exterior mass below " << kMassFloor << " at delta=" << deltas[d] << ", sweep truncated";
      sw.flags.push_back(os.str());
      break;
    }
    sw.parameters.push_back(deltas[d]);
    for (int j = 0; j < m; ++j) {
      auto& L = sw.levels[static_cast<std::size_t>(j)];
      const auto& pair = spectra[d].pairs[static_cast<std::size_t>(j)];
      L.eigenvalues.push_back(pair.lambda);
      L.values.push_back(mass[static_cast<std::size_t>(j)]);
      L.changes.push_back(eig::nodal_report(pair, sys.grid()).whole.changes);
    }
  }
  fit_levels(sw);
  sw.validate();
  return sw;
}

ProjectionSplit dirichlet_split(const WellSystem& sys, const eig::EigenPair& pair) {
  require(static_cast<std::size_t>(pair.u.size()) == sys.grid().size(),
          "dirichlet_split: eigenpair must live on the I-grid");
  const auto& A = sys.base().matrix;
  const auto& U = sys.well_nodes();
  const auto& E = sys.exterior_nodes();
  const auto nu = static_cast<Eigen::Index>(U.size()), ne = static_cast<Eigen::Index>(E.size());

  Eigen::MatrixXd auu(nu, nu);
  Eigen::MatrixXd aue(nu, ne);
  Eigen::VectorXd uext(ne);
  for (Eigen::Index a = 0; a < nu; ++a) {
    for (Eigen::Index b = 0; b < nu; ++b) auu(a, b) = A(U[a], U[b]);
    for (Eigen::Index b = 0; b < ne; ++b) aue(a, b) = A(U[a], E[b]);
  }
  for (Eigen::Index b = 0; b < ne; ++b) uext(b) = pair.u(E[b]);

  Eigen::LLT<Eigen::MatrixXd> llt(auu);
  if (llt.info() != Eigen::Success)
    throw NumericalError("dirichlet_split: well block of the operator is not positive definite");
  const Eigen::VectorXd wu = llt.solve(-(aue * uext));

  ProjectionSplit out;
  out.w = pair.u;
  for (Eigen::Index a = 0; a < nu; ++a) out.w(U[a]) = wu(a);
  out.v = pair.u - out.w;
  for (int i : E) out.v(i) = 0.0;
  out.defect = (pair.u - out.v - out.w).norm();
  const Eigen::VectorXd aw = A * out.w;
  double r = 0;
  for (int i : U) r += aw(i) * aw(i);
  const double norm_inf = A.cwiseAbs().rowwise().sum().maxCoeff();
  out.residual = std::sqrt(r) / norm_inf;
  return out;
}

LpRatio lp_bound_check(const WellSystem& sys, const ProjectionSplit& split, double p_exponent) {
  const double s = sys.problem().s;
  require(std::isfinite(p_exponent), "lp_bound_check: exponent must be finite");
  if (s <= 0.5)
    require(p_exponent > 2, "lp_bound_check: p must exceed 2 for s <= 1/2");
  else
    require(p_exponent > 1.0 / (1.0 - s), "lp_bound_check: p must exceed 1/(1-s) for s > 1/2");
  require(static_cast<std::size_t>(split.w.size()) == sys.grid().size(), "lp_bound_check: size mismatch");

  LpRatio out;
  std::vector<bool> ext(sys.grid().size(), false);
  for (int i : sys.exterior_nodes()) ext[static_cast<std::size_t>(i)] = true;
  out.l2_wells = eig::lp_norm(split.w, sys.grid(), sys.in_wells(), 2.0);
  out.lp_exterior = eig::lp_norm(split.w, sys.grid(), ext, p_exponent);
  if (out.l2_wells == 0 && out.lp_exterior == 0) return out;
  if (out.lp_exterior < kMassFloor) {
    out.skipped = true;
    return out;
  }
  out.ratio = out.l2_wells / out.lp_exterior;
  return out;
}

namespace {

// Weighted orthonormal basis of the given columns on the well grid.
Eigen::MatrixXd orthonormal(const Eigen::MatrixXd& cols, double h) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(cols * std::sqrt(h));
  return qr.householderQ() * Eigen::MatrixXd::Identity(cols.rows(), cols.cols());
}

}  // namespace

ConvergenceStudy convergence_study(const WellSystem& sys, std::vector<double> deltas, int m) {
  deltas = decreasing_parameters(std::move(deltas));
  for (double d : deltas) check_delta(d);
  require(m >= 1, "convergence_study: at least one level");
  const eig::Spectrum inf = solve_infinite_well(sys, m + 1);
  const double h = sys.well_grid().h();

  ConvergenceStudy st;
  const auto n = static_cast<std::size_t>(m);
  st.degenerate.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    st.infinite_eigenvalues.push_back(inf.pairs[i].lambda);
    const double li = inf.pairs[i].lambda;
    const bool below = i > 0 && li - inf.pairs[i - 1].lambda < 1e-6 * std::abs(li);
    const bool above = inf.pairs[i + 1].lambda - li < 1e-6 * std::abs(li);
    st.degenerate[i] = below || above;
  }

  const auto spectra = parallel_map(deltas.size(), [&](std::size_t d) { return solve_finite_well(sys, deltas[d], m + 1); });

  SweepResult& sw = st.sweep;
  sw.parameter_name = "delta";
  sw.quantity = "L2(U) distance to infinite-well eigenfunction";
  sw.grid_cells = sys.problem().grid_cells;
  sw.parameters = deltas;
  sw.levels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sw.levels[i].level = static_cast<int>(i) + 1;
    if (st.degenerate[i])
      sw.flags.push_back("level " + std::to_string(i + 1) + " is near-degenerate, compared by principal angles");
  }

  for (std::size_t d = 0; d < deltas.size(); ++d) {
    std::vector<double> lam;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pd = spectra[d].pairs[i];
      lam.push_back(pd.lambda);
      double value = 0;
      if (!st.degenerate[i]) {
        Eigen::VectorXd ud = sys.restrict_to_wells(pd.u);
        if (eig::l2_inner(ud, inf.pairs[i].u, sys.well_grid()) < 0) ud = -ud;
        value = eig::l2_norm(ud - inf.pairs[i].u, sys.well_grid());
      } else {
        // Sine of the largest principal angle between the two-level spans.
        const std::size_t lo = (i > 0 && inf.pairs[i].lambda - inf.pairs[i - 1].lambda <
                                             1e-6 * std::abs(inf.pairs[i].lambda))
                                   ? i - 1
                                   : i;
        Eigen::MatrixXd ref(sys.well_grid().size(), 2), fin(sys.well_grid().size(), 2);
        for (int c = 0; c < 2; ++c) {
          ref.col(c) = inf.pairs[lo + static_cast<std::size_t>(c)].u;
          fin.col(c) = sys.restrict_to_wells(spectra[d].pairs[lo + static_cast<std::size_t>(c)].u);
        }
        const Eigen::MatrixXd q1 = orthonormal(ref, h), q2 = orthonormal(fin, h);
        const Eigen::MatrixXd resid = q2 - q1 * (q1.transpose() * q2);
        value = Eigen::JacobiSVD<Eigen::MatrixXd>(resid).singularValues()(0);
      }
      auto& L = sw.levels[i];
      L.eigenvalues.push_back(pd.lambda);
      L.values.push_back(value);
      L.changes.push_back(eig::nodal_report(pd, sys.grid()).whole.changes);
    }
    st.finite_eigenvalues.push_back(std::move(lam));
  }
  fit_levels(sw);
  sw.validate();
  return st;
}

void CounterexampleConfig::validate() const {
  require(s > 0 && s < 1, "config: s must lie in (0, 1)");
  require(std::isfinite(eps) && eps > 0, "config: eps must be positive");
  require(!centers.empty(), "config: centers must be non-empty");
  require(V.size() == centers.size(), "config: V needs one value per center");
  for (double v : V) require(std::isfinite(v), "config: V must be finite");
  require(std::isfinite(delta) && delta >= kMinDelta, "config: delta must be >= 1e-12");
  require(grid_n >= 8 && grid_n <= 4000, "config: grid_n must lie in [8, 4000]");
  require(std::isfinite(v2_factor) && v2_factor >= 0, "config: v2_factor must be non-negative");
  require(std::isfinite(tau_rel) && tau_rel >= 0 && tau_rel < 1, "config: tau_rel must lie in [0, 1)");
  if (v2_factor > 0) require(centers.size() == 3, "config: the v2_factor check needs exactly three wells");
  // Geometry and cell alignment are checked by constructing the coarse and refined systems.
  const discretize::IntervalUnion u(centers, eps);
  const discretize::Domain d = u.domain();
  for (int n : {grid_n, 2 * grid_n})
    discretize::build_grid(discretize::IntervalUnion::enclosing(), 0.5 * n).cells_in(d);
}

NodalCounts nodal_counts(const WellProblem& problem, double delta, double tau_rel,
                         eig::Spectrum* coarse_pairs, discretize::UniformGrid* coarse_grid) {
  NodalCounts out;
  for (int refine : {1, 2}) {
    WellProblem p = problem;
    p.grid_cells = problem.grid_cells * refine;
    const WellSystem sys(p);
    const eig::Spectrum sp = solve_finite_well(sys, delta, 4);
    std::vector<int> counts;
    for (int i = 0; i < 3; ++i) counts.push_back(eig::nodal_report(sp.pairs[static_cast<std::size_t>(i)], sys.grid(), tau_rel).whole.changes);
    if (refine == 1) {
      out.coarse = counts;
      for (int i = 0; i < 3; ++i) {
        out.eigenvalues.push_back(sp.pairs[static_cast<std::size_t>(i)].lambda);
        out.gaps.push_back(sp.pairs[static_cast<std::size_t>(i) + 1].lambda - sp.pairs[static_cast<std::size_t>(i)].lambda);
      }
      if (coarse_pairs) {
        *coarse_pairs = sp;
        coarse_pairs->pairs.resize(3);
      }
      if (coarse_grid) *coarse_grid = sys.grid();
    } else {
      out.fine = counts;
    }
  }
  return out;
}

Verdict counterexample_run(const CounterexampleConfig& config) {
  config.validate();
  const discretize::IntervalUnion geometry(config.centers, config.eps);
  WellProblem perturbed{geometry, config.V, config.s, config.grid_n};
  WellProblem control{geometry, std::vector<double>(config.V.size(), 0.0), config.s, config.grid_n};

  Verdict v;
  v.control = nodal_counts(control, config.delta, config.tau_rel, &v.control_pairs);

  if (config.v2_factor > 0) {
    const double scale = std::max({config.V[0], config.V[2], v.control.eigenvalues[1] - v.control.eigenvalues[0]});
    if (config.V[1] < config.v2_factor * scale) {
      std::ostringstream os;
      os << "config: V2 = " << config.V[1] << " must be >= v2_factor * max(V1, V3, control gap) = "
         << config.v2_factor * scale;
      throw InputError(os.str());
    }
  }

  v.perturbed = nodal_counts(perturbed, config.delta, config.tau_rel, &v.perturbed_pairs, &v.grid);

  bool inconclusive = false;
  if (!v.perturbed.stable()) {
    v.notes.push_back("perturbed sign counts change under 2x refinement");
    inconclusive = true;
  }
  if (!v.control.stable()) {
    v.notes.push_back("control sign counts change under 2x refinement");
    inconclusive = true;
  }
  for (const auto* nc : {&v.perturbed, &v.control}) {
    for (std::size_t i = 0; i < nc->gaps.size(); ++i) {
      if (nc->gaps[i] < 1e-6 * std::abs(nc->eigenvalues[i])) {
        v.notes.push_back(std::string(nc == &v.perturbed ? "perturbed" : "control") + " eigenvalue " +
                          std::to_string(i + 1) + " is not simple");
        inconclusive = true;
      }
    }
  }
  if (inconclusive) {
    v.status = "inconclusive";
    return v;
  }
  const bool perturbed_ok = v.perturbed.coarse == v.expected_perturbed;
  const bool control_ok = v.control.coarse[0] == 0 && v.control.coarse[1] == 1;
  if (!perturbed_ok) v.notes.push_back("perturbed counts differ from the expected (0, 2, 1)");
  if (!control_ok) v.notes.push_back("control second eigenfunction does not have exactly one sign change");
  v.status = perturbed_ok && control_ok ? "pass" : "refuted";
  return v;
}

}  // namespace nodalfrac::wells
