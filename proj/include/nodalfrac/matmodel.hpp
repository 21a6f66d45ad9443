#pragma once

// Three-well reduced matrix model: the symmetric matrix
//
//        [ U  c  b ]
//    M = [ c  V  a ]      a, b, c < 0,  |b| < |a|, |b| < |c|
//        [ b  a  W ]
//
// its Perron ground state, the (X, Z) normalization that places a zero
// eigenvalue on the coordinate axes, sign patterns of the second
// eigenvector, and the eigen-sensitivities along Z.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace nodalfrac::matmodel {

inline constexpr double kDefaultZeroTolerance = 1e-8;
inline constexpr double kDegeneracyTolerance = 1e-12;

enum class Sign : std::int8_t { minus = -1, zero = 0, plus = 1 };

char sign_char(Sign s);

struct SignChangeReport {
  std::vector<Sign> pattern;
  int changes = 0;
  double tolerance = kDefaultZeroTolerance;

  std::string pattern_string() const;  // e.g. "-+-" or "0+-"
};

// Entries with |v| <= tau_rel * max|v| are zero; changes are the strict
// sign flips of the zero-deleted sequence. Throws InputError on an empty or
// all-zero vector.
SignChangeReport count_sign_changes(std::span<const double> values,
                                    double tau_rel = kDefaultZeroTolerance);

struct ReducedMatrix {
  double U = 0, V = 0, W = 0;
  double a = 0, b = 0, c = 0;  // c couples rows 1-2, b rows 1-3, a rows 2-3

  Eigen::Matrix3d matrix() const;
  double entry(int row, int col) const;  // 1-based, as in the model
  double norm() const;                   // Frobenius norm
  double trace() const { return U + V + W; }
  ReducedMatrix shifted(double sigma) const;
};

ReducedMatrix assemble_reduced(double U, double V, double W, double a, double b, double c);

struct WellCoordinates {
  double X = 0, Z = 0;
  double a = 0, b = 0, c = 0;
};

// V = ac/b, U = bc/a + X, W = ab/c + Z. At X = Z = 0 the matrix annihilates
// [a,-b,0] and [0,-b,c].
ReducedMatrix assemble_normalized(const WellCoordinates& coords);

/// Eigenvalues ascending; column j of `vectors` is the unit eigenvector of
/// values[j].
struct Eigensystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Cyclic Jacobi rotation for small dense symmetric matrices (used for the
// 3x3 model and the k x k correction matrix).
Eigensystem jacobi_eigensystem(const Eigen::MatrixXd& symmetric);

Eigensystem eigendecompose(const ReducedMatrix& m);

struct GroundState {
  double lambda = 0;
  Eigen::Vector3d vector;  // unit, all components > 0
  double gap = 0;          // lambda_2 - lambda_1
};

// Throws NumericalError if the minimum eigenvalue is degenerate or its
// eigenvector is not strictly one-signed.
GroundState ground_state_positivity(const ReducedMatrix& m);

struct SecondEigenClass {
  SignChangeReport report;
  double lambda2 = 0;
  int lambda2_sign = 0;
  Eigen::Vector3d vector;  // canonical sign: middle entry >= 0
  double gap = 0;          // min distance from lambda2 to its neighbours
  bool near_degenerate = false;
};

// Brute-force classification of the second eigenpair of the normalized
// matrix. When the eigenvalue gap falls below tau * ||M|| the result is
// flagged near-degenerate and the report is left empty.
SecondEigenClass classify_second_eigenvector(const WellCoordinates& coords,
                                             double tau = kDefaultZeroTolerance);

/// Derivatives along Z of the eigenpair that equals (0, [0,-b,c]) at Z = 0.
struct Sensitivity {
  double dlambda = 0;          // c^2 with b^2 + c^2 = 1
  double dx = 0;               // b^2 c^2 / (a X) with b^2 + c^2 = 1
  WellCoordinates normalized;  // a, b, c scaled so that b^2 + c^2 = 1
};

// Closed form. Requires Z = 0 and X != 0. The couplings are rescaled by
// 1/sqrt(b^2 + c^2) before evaluation, X is kept as given.
Sensitivity eigen_sensitivity(const WellCoordinates& coords);

// Centered finite differences of eigendecompose over Z on the same
// normalized instance, tracking the eigenpair continuous with [0,-b,c].
Sensitivity sensitivity_finite_difference(const WellCoordinates& coords, double step = 1e-5);

// v^T M v / v^T v. Throws InputError on a zero vector.
double rayleigh_energy(const ReducedMatrix& m, const Eigen::Vector3d& v);

/// Couplings drawn as a, c ~ U(-1, -0.3), b ~ U(-min(|a|,|c|) + margin, -0.05).
struct CouplingSampler {
  double margin = 0.05;

  std::array<double, 3> operator()(std::mt19937_64& rng) const;  // {a, b, c}
};

struct PhaseRecord {
  double X = 0, Z = 0;
  double lambda2 = 0;
  int changes = 0;
  std::string pattern;
  bool near_degenerate = false;
};

// (grid x grid) scan of (X, Z) in [-1, 1]^2, skipping points on either axis.
std::vector<PhaseRecord> phase_scan(double a, double b, double c, int grid,
                                    double tau = kDefaultZeroTolerance);

}  // namespace nodalfrac::matmodel
