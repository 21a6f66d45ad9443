#pragma once

// Finite and infinite potential wells on a union U of sub-intervals of
// I = (-1, 1), the barrier sweeps delta -> 0, the exterior-harmonic split
// u = v + w, and the end-to-end nodal count verdict.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "nodalfrac/discretize.hpp"
#include "nodalfrac/eigensolve.hpp"
#include "nodalfrac/sweep.hpp"

namespace nodalfrac::wells {

struct WellProblem {
  discretize::IntervalUnion geometry;
  std::vector<double> V;  // one value per well
  double s = 0.5;
  int grid_cells = 400;   // cells on I = (-1, 1)
};

/// Assembled once per problem: the operator on I (no potential), the
/// U-membership of every cell, and the U-subgrid.
class WellSystem {
 public:
  explicit WellSystem(WellProblem problem);

  const WellProblem& problem() const { return problem_; }
  const discretize::UniformGrid& grid() const { return base_.grid; }      // on I
  const discretize::UniformGrid& well_grid() const { return well_grid_; } // on U
  const discretize::DiscreteOperator& base() const { return base_; }
  const std::vector<bool>& in_wells() const { return in_wells_; }
  const std::vector<int>& well_nodes() const { return well_nodes_; }
  const std::vector<int>& exterior_nodes() const { return exterior_nodes_; }
  const Eigen::VectorXd& well_potential() const { return well_potential_; }  // on I-grid, 0 off U

  discretize::DiscreteOperator infinite_operator() const;
  discretize::DiscreteOperator finite_operator(double delta) const;

  // Zero extension of a U-grid function to the I-grid.
  Eigen::VectorXd embed(const Eigen::VectorXd& on_wells) const;
  Eigen::VectorXd restrict_to_wells(const Eigen::VectorXd& on_interval) const;

 private:
  WellProblem problem_;
  discretize::DiscreteOperator base_;
  std::vector<bool> in_wells_;
  std::vector<int> well_nodes_;
  std::vector<int> exterior_nodes_;
  discretize::UniformGrid well_grid_;
  Eigen::VectorXd well_potential_;
};

// Barrier values above this reciprocal are rejected: 1/delta would swamp
// the operator entries in double precision.
inline constexpr double kMinDelta = 1e-12;

eig::Spectrum solve_infinite_well(const WellSystem& sys, int m);
eig::Spectrum solve_finite_well(const WellSystem& sys, double delta, int m);

// u is sampled on the I-grid.
double energy(const WellSystem& sys, const Eigen::VectorXd& u);
double energy_delta(const WellSystem& sys, const Eigen::VectorXd& u, double delta);

// || u_{i,delta} ||_{L2(I \ U)} for levels 1..m.
SweepResult exterior_mass_sweep(const WellSystem& sys, std::vector<double> deltas, int m);

struct ProjectionSplit {
  Eigen::VectorXd v;  // vanishes off U
  Eigen::VectorXd w;  // discretely exterior-harmonic in U, equals u off U
  double defect = 0;    // ||u - v - w||_2
  double residual = 0;  // ||(A w)|_U||_2 / ||A||
};

ProjectionSplit dirichlet_split(const WellSystem& sys, const eig::EigenPair& pair);

struct LpRatio {
  double l2_wells = 0;     // ||w||_{L2(U)}
  double lp_exterior = 0;  // ||w||_{Lp(I \ closure U)}
  double ratio = 0;
  bool skipped = false;    // denominator below quadrature noise
};

// Throws InputError when p_exponent is outside the admissible range
// (p > 2 for s <= 1/2, p > 1/(1-s) for s > 1/2).
LpRatio lp_bound_check(const WellSystem& sys, const ProjectionSplit& split, double p_exponent);

/// || u_{i,delta} - u_i ||_{L2(U)} per delta and level.
struct ConvergenceStudy {
  SweepResult sweep;
  std::vector<bool> degenerate;       // per level: compared via principal angles
  std::vector<double> infinite_eigenvalues;
  std::vector<std::vector<double>> finite_eigenvalues;  // [delta][level]
};

ConvergenceStudy convergence_study(const WellSystem& sys, std::vector<double> deltas, int m);

/// Inputs of the end-to-end run. Field names double as config keys.
struct CounterexampleConfig {
  double s = 0.5;
  std::vector<double> centers{-0.5, 0.0, 0.5};
  double eps = 0.05;
  std::vector<double> V{0.0, 50.0, 0.0};
  double delta = 1e-4;
  int grid_n = 400;
  double v2_factor = 50.0;  // 0 disables the V2 >> V1, V3 check
  double tau_rel = 1e-8;

  void validate() const;
};

struct NodalCounts {
  std::vector<int> coarse;  // levels 1..3 at grid_n
  std::vector<int> fine;    // levels 1..3 at 2 grid_n
  std::vector<double> eigenvalues;
  std::vector<double> gaps;  // lambda_{i+1} - lambda_i
  bool stable() const { return coarse == fine; }
};

struct Verdict {
  std::string status;  // "pass", "refuted", "inconclusive"
  NodalCounts perturbed;
  NodalCounts control;  // same geometry with V = 0
  std::vector<int> expected_perturbed{0, 2, 1};
  std::vector<std::string> notes;
  eig::Spectrum perturbed_pairs;  // at grid_n, for artifacts
  eig::Spectrum control_pairs;
  discretize::UniformGrid grid;
};

// Finite-well nodal counts for the configured potential and for the V = 0
// control, each at grid_n and 2 grid_n. Any refinement-unstable count makes
// the verdict "inconclusive".
Verdict counterexample_run(const CounterexampleConfig& config);

NodalCounts nodal_counts(const WellProblem& problem, double delta, double tau_rel,
                         eig::Spectrum* coarse_pairs = nullptr,
                         discretize::UniformGrid* coarse_grid = nullptr);

}  // namespace nodalfrac::wells
