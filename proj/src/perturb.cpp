#include "nodalfrac/perturb.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "nodalfrac/error.hpp"
#include "nodalfrac/parallel.hpp"

namespace nodalfrac::perturb {

void RescaledSystem::validate() const {
  require(s.q > 0 && s.p > 0 && s.p < s.q, "RescaledSystem: s = p/q must lie in (0, 1)");
  require(!centers.empty(), "RescaledSystem: at least one well required");
  require(V.size() == centers.size(), "RescaledSystem: one potential value per well required");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    require(std::isfinite(centers[i]), "RescaledSystem: non-finite center");
    require(std::isfinite(V[i]), "RescaledSystem: non-finite potential value");
    if (i > 0) require(centers[i - 1] < centers[i], "RescaledSystem: centers must be strictly increasing");
  }
  require(std::isfinite(eps) && eps >= 0, "RescaledSystem: eps must be non-negative");
  require(cells >= 8, "RescaledSystem: at least 8 cells on the reference interval");
}

double RescaledSystem::beta() const { return std::pow(eps, 1.0 / s.q); }

double RescaledSystem::min_separation() const {
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < centers.size(); ++i) sep = std::min(sep, centers[i] - centers[i - 1]);
  return sep;
}

std::shared_ptr<const ReferenceState> reference_state(Rational s, int cells) {
  require(s.q > 0 && s.p > 0 && s.p < s.q, "reference_state: s = p/q must lie in (0, 1)");
  require(cells >= 8, "reference_state: at least 8 cells required");
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::shared_ptr<const ReferenceState>> cache;
  const auto key = std::pair{s.value(), cells};
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  auto ref = std::make_shared<ReferenceState>();
  const auto grid = discretize::build_grid(discretize::Domain::interval(-1.0, 1.0), 0.5 * cells);
  ref->op = discretize::assemble_fractional(grid, s.value());
  const eig::Spectrum sp = eig::solve_lowest(ref->op, 1);
  ref->lambda0 = sp.pairs[0].lambda;
  ref->u0 = sp.pairs[0].u;
  if (!(ref->u0.array() > 0).all())
    throw NumericalError("reference_state: reference ground state is not one-signed");
  ref->mean = eig::l2_inner(ref->u0, Eigen::VectorXd::Ones(ref->u0.size()), grid) / 2.0;
  cache.emplace(key, ref);
  return ref;
}

BlockOperator assemble_rescaled(const RescaledSystem& sys) {
  sys.validate();
  return assemble_rescaled(sys, *reference_state(sys.s, sys.cells));
}

BlockOperator assemble_rescaled(const RescaledSystem& sys, const ReferenceState& ref) {
  sys.validate();
  const std::size_t k = sys.k();
  if (k >= 2) {
    const double ratio = 2 * sys.eps / sys.min_separation();
    require(ratio < 1, "assemble_rescaled: 2 eps / min|x_i - x_j| = " + std::to_string(ratio) +
                           " must be < 1");
  }
  const double s = sys.s.value();
  const auto n = static_cast<Eigen::Index>(ref.op.size());
  const auto& grid = ref.op.grid;
  const double h = grid.h();
  const double c = ref.op.c_s;
  const double weight = std::pow(sys.eps, 2 * s);       // eps^{2s}
  const double order = std::pow(sys.eps, 1 + 2 * s);    // eps^{1+2s}

  BlockOperator out;
  out.k = k;
  out.block = static_cast<std::size_t>(n);
  out.grid = grid;
  out.eps = sys.eps;
  out.s = s;
  const auto N = static_cast<Eigen::Index>(k) * n;
  out.matrix = Eigen::MatrixXd::Zero(N, N);

  for (std::size_t i = 0; i < k; ++i) {
    const Eigen::Index oi = static_cast<Eigen::Index>(i) * n;
    out.matrix.block(oi, oi, n, n) = ref.op.matrix;
    out.matrix.diagonal().segment(oi, n).array() += order * sys.V[i];
  }
  if (sys.eps == 0.0) return out;

  // Cross-well coupling: eps^{2s} c_s times the exact kernel integral over the
  // rescaled source cell, i.e. eps^{1+2s} c_s int_{cell w} |eps(z - w') + x_i - x_j|^{-1-2s} dw'.
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = sys.centers[i] - sys.centers[j];
      const Eigen::Index oi = static_cast<Eigen::Index>(i) * n, oj = static_cast<Eigen::Index>(j) * n;
      for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
          const double D = std::abs(sys.eps * (grid.nodes[a] - grid.nodes[b]) + d);
          const double v = -weight * c * discretize::cell_kernel_integral(D, sys.eps * h, s);
          out.matrix(oi + a, oj + b) = v;
          out.matrix(oj + b, oi + a) = v;
        }
      }
    }
  }

  if (sys.form == CouplingForm::published) {
    for (std::size_t i = 0; i < k; ++i) {
      const Eigen::Index oi = static_cast<Eigen::Index>(i) * n;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == i) continue;
        const Eigen::Index oj = static_cast<Eigen::Index>(j) * n;
        out.matrix.diagonal().segment(oi, n) -= out.matrix.block(oi, oj, n, n).rowwise().sum();
      }
    }
  }
  return out;
}

CorrectionMatrix assemble_Mhat(const RescaledSystem& sys) {
  sys.validate();
  return assemble_Mhat(sys, *reference_state(sys.s, sys.cells));
}

CorrectionMatrix assemble_Mhat(const RescaledSystem& sys, const ReferenceState& ref) {
  sys.validate();
  if (!(ref.u0.array() > 0).all())
    throw NumericalError("assemble_Mhat: reference ground state is not one-signed");
  const std::size_t k = sys.k();
  const double s = sys.s.value();
  const double c = ref.op.c_s;
  CorrectionMatrix out;
  out.means.assign(k, ref.mean);
  out.M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    double diag = sys.V[j];
    for (std::size_t l = 0; l < k; ++l) {
      if (l == j) continue;
      const double kern = std::pow(std::abs(sys.centers[j] - sys.centers[l]), -(1 + 2 * s));
      if (sys.form == CouplingForm::published) diag += 2 * c * kern;
      out.M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) =
          -4 * c * out.means[j] * out.means[l] * kern;
    }
    out.M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = diag;
  }
  out.eigen = matmodel::jacobi_eigensystem(out.M);
  return out;
}

double to_original_frame(double lambda_rescaled, double eps, double s) {
  require(eps > 0, "to_original_frame: eps must be positive");
  return lambda_rescaled / std::pow(eps, 2 * s);
}

BlockSpectrum solve_block(const BlockOperator& op, int m) {
  const Eigen::Index N = op.matrix.rows();
  require(m >= 1 && m <= N, "solve_block: requested count exceeds the matrix size");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op.matrix);
  if (solver.info() != Eigen::Success) throw NumericalError("solve_block: eigensolver did not converge");
  const double h = op.grid.h();
  BlockSpectrum out;
  for (int j = 0; j < m; ++j) {
    out.values.push_back(solver.eigenvalues()(j));
    Eigen::VectorXd v = solver.eigenvectors().col(j) / std::sqrt(h);
    if (v.sum() < 0) v = -v;
    out.vectors.push_back(std::move(v));
  }
  return out;
}

SplittingFit splitting_fit(const RescaledSystem& sys, std::vector<double> eps_list) {
  sys.validate();
  const std::size_t k = sys.k();
  require(k >= 2, "splitting_fit: at least two wells required");
  eps_list = decreasing_parameters(std::move(eps_list));
  require(eps_list.size() >= 2, "splitting_fit: at least two eps values required");
  require(2 * eps_list.front() < sys.min_separation(),
          "splitting_fit: largest eps violates 2 eps / min|x_i - x_j| < 1");

  const auto ref = reference_state(sys.s, sys.cells);
  const double s = sys.s.value();
  const auto n = static_cast<Eigen::Index>(ref->op.size());

  SplittingFit fit;
  fit.lambda0 = ref->lambda0;
  fit.mhat = assemble_Mhat(sys, *ref);

  RescaledSystem at_zero = sys;
  at_zero.eps = 0.0;
  const BlockSpectrum zero = solve_block(assemble_rescaled(at_zero, *ref), static_cast<int>(k));
  for (double v : zero.values) fit.lambda0_spread.push_back(std::abs(v - fit.lambda0) / std::abs(fit.lambda0));

  struct Point {
    std::vector<double> values;
    std::vector<int> changes;
  };
  const auto points = parallel_map(eps_list.size(), [&](std::size_t e) {
    RescaledSystem cur = sys;
    cur.eps = eps_list[e];
    const BlockSpectrum bs = solve_block(assemble_rescaled(cur, *ref), static_cast<int>(k));
    Point p;
    p.values = bs.values;
    for (const auto& v : bs.vectors) {
      // Coefficient pattern over the wells: block integrals of the eigenvector.
      std::vector<double> coeff(k);
      for (std::size_t i = 0; i < k; ++i) coeff[i] = v.segment(static_cast<Eigen::Index>(i) * n, n).sum();
      p.changes.push_back(matmodel::count_sign_changes(coeff).changes);
    }
    return p;
  });

  SweepResult& sw = fit.sweep;
  sw.parameter_name = "eps";
  sw.quantity = "abs(lambda_j - lambda0)";
  sw.grid_cells = sys.cells;
  sw.parameters = eps_list;
  sw.levels.resize(k);
  fit.ratios.assign(eps_list.size(), std::vector<double>(k));
  for (std::size_t j = 0; j < k; ++j) {
    LevelSeries& L = sw.levels[j];
    L.level = static_cast<int>(j) + 1;
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      const double diff = points[e].values[j] - fit.lambda0;
      L.eigenvalues.push_back(points[e].values[j]);
      L.values.push_back(std::abs(diff));
      L.changes.push_back(points[e].changes[j]);
      fit.ratios[e][j] = diff / std::pow(eps_list[e], 1 + 2 * s);
    }
    bool ok = true;
    for (std::size_t e = 1; e < L.values.size(); ++e) {
      const double prev = points[e - 1].values[j] - fit.lambda0, cur = points[e].values[j] - fit.lambda0;
      if (!(L.values[e] < L.values[e - 1]) || (prev > 0) != (cur > 0)) ok = false;
    }
    if (!ok) {
      fit.monotone = false;
      sw.flags.push_back("non-monotone splitting at level " + std::to_string(j + 1));
    }
    if (std::all_of(L.values.begin(), L.values.end(), [](double v) { return v > 0; })) {
      L.fit = fit_loglog(sw.parameters, L.values);
      L.fitted = true;
    } else {
      sw.flags.push_back("zero splitting at level " + std::to_string(j + 1) + ", not fitted");
    }
    const double target = fit.mhat.eigen.values(static_cast<Eigen::Index>(j));
    fit.final_ratio.push_back(fit.ratios.back()[j]);
    fit.final_relative_error.push_back(std::abs(fit.ratios.back()[j] - target) / std::abs(target));
  }
  sw.validate();
  return fit;
}

}  // namespace nodalfrac::perturb
