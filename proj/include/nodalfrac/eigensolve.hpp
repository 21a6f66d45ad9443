#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

#include "nodalfrac/discretize.hpp"
#include "nodalfrac/matmodel.hpp"

namespace nodalfrac::eig {

/// Eigenvalue with its grid-sampled eigenfunction, normalized to
/// sum_i h_i u_i^2 = 1. `residual` is ||A e - lambda e||_2 for the
/// Euclidean-unit nodal vector e.
struct EigenPair {
  double lambda = 0;
  Eigen::VectorXd u;
  double residual = 0;
};

struct Spectrum {
  std::vector<EigenPair> pairs;
  double operator_norm = 0;  // spectral norm of the matrix
};

// Lowest m eigenpairs, ascending with multiplicity. The global sign of every
// eigenfunction makes its mean over the first domain component positive
// (largest-magnitude entry positive when that mean vanishes).
Spectrum solve_lowest(const discretize::DiscreteOperator& op, int m);
Spectrum solve_lowest(const Eigen::MatrixXd& symmetric, const discretize::UniformGrid& grid, int m);

// Composite midpoint quadrature over the whole grid or over the cells that
// lie inside `region` (region must be cell aligned).
double l2_norm(const Eigen::VectorXd& u, const discretize::UniformGrid& grid);
double l2_norm(const Eigen::VectorXd& u, const discretize::UniformGrid& grid,
               const discretize::Domain& region);
double l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                const discretize::UniformGrid& grid);
double lp_norm(const Eigen::VectorXd& u, const discretize::UniformGrid& grid,
               const std::vector<bool>& mask, double p);

// Rayleigh quotient with respect to the grid inner product.
double rayleigh_quotient(const Eigen::MatrixXd& a, const Eigen::VectorXd& u,
                         const discretize::UniformGrid& grid);

struct NodalReport {
  matmodel::SignChangeReport whole;
  std::vector<matmodel::SignChangeReport> per_component;
};

NodalReport nodal_report(const EigenPair& pair, const discretize::UniformGrid& grid,
                         double tau_rel = matmodel::kDefaultZeroTolerance);

// CSV "index,x,value" plus a JSON sidecar {lambda, residual, changes}.
void write_pair_csv(std::ostream& os, const EigenPair& pair, const discretize::UniformGrid& grid);
void write_pair_json(std::ostream& os, const EigenPair& pair, const discretize::UniformGrid& grid,
                     double tau_rel = matmodel::kDefaultZeroTolerance);

}  // namespace nodalfrac::eig
