#pragma once

// Rescaled k-well operator family and its degenerate ground-state splitting.
//
// Each well (x_i - eps, x_i + eps) is mapped onto the reference interval
// I = (-1, 1). In the rescaled frame the problem becomes a k x k block
// operator whose diagonal blocks are the reference restricted operator on I
// and whose coupling is of order eps^{1+2s}. At eps = 0 the ground state is
// k-fold degenerate; the leading splitting is eps^{1+2s} times the
// eigenvalues of the k x k correction matrix M-hat.

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "nodalfrac/discretize.hpp"
#include "nodalfrac/eigensolve.hpp"
#include "nodalfrac/matmodel.hpp"
#include "nodalfrac/sweep.hpp"

namespace nodalfrac::perturb {

enum class CouplingForm {
  // Diagonal picks up c_s sum_j int_I dw / |eps(z-w) + x_i - x_j|^{1+2s};
  // M-hat diagonal is V_j + 2 c_s sum_l |x_j - x_l|^{-(1+2s)}.
  published,
  // Only the cross-well terms; identical to the infinite-well operator on the
  // union after rescaling. M-hat diagonal is V_j.
  restricted,
};

/// Positive rational fractional order p/q in (0, 1).
struct Rational {
  int p = 1, q = 2;
  double value() const { return static_cast<double>(p) / q; }
};

struct RescaledSystem {
  std::vector<double> centers;
  std::vector<double> V;
  double eps = 0.0;
  Rational s{1, 2};
  int cells = 400;  // cells on the reference interval
  CouplingForm form = CouplingForm::published;

  void validate() const;
  std::size_t k() const { return centers.size(); }
  double beta() const;                      // eps^{1/q}
  int beta_order() const { return s.q + 2 * s.p; }  // eps^{1+2s} = beta^{q+2p}
  double min_separation() const;
};

/// Reference restricted operator on I with its positive ground state; shared
/// by every system with the same (s, cells).
struct ReferenceState {
  discretize::DiscreteOperator op;
  double lambda0 = 0;
  Eigen::VectorXd u0;  // L2(I)-normalized, positive
  double mean = 0;     // average of u0 over I
};

std::shared_ptr<const ReferenceState> reference_state(Rational s, int cells);

struct BlockOperator {
  Eigen::MatrixXd matrix;
  std::size_t k = 0;
  std::size_t block = 0;
  discretize::UniformGrid grid;  // reference grid (one block)
  double eps = 0;
  double s = 0.5;
};

// Throws InputError when 2 eps / min|x_i - x_j| >= 1.
BlockOperator assemble_rescaled(const RescaledSystem& sys);
BlockOperator assemble_rescaled(const RescaledSystem& sys, const ReferenceState& ref);

struct CorrectionMatrix {
  Eigen::MatrixXd M;
  std::vector<double> means;
  matmodel::Eigensystem eigen;  // ascending lambda^4_j with coefficient vectors
};

CorrectionMatrix assemble_Mhat(const RescaledSystem& sys);
CorrectionMatrix assemble_Mhat(const RescaledSystem& sys, const ReferenceState& ref);

// Rescaled-frame eigenvalues relate to the original frame by
// lambda_original = lambda_rescaled / eps^{2s}.
double to_original_frame(double lambda_rescaled, double eps, double s);

/// Product-space eigenpair of a block operator; u stacks the k blocks.
struct BlockSpectrum {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> vectors;  // product-space L2-normalized
};
BlockSpectrum solve_block(const BlockOperator& op, int m);

struct SplittingFit {
  SweepResult sweep;          // quantity: |lambda_j - lambda0| vs eps
  std::vector<double> lambda0_spread;  // relative spread at eps = 0
  double lambda0 = 0;
  CorrectionMatrix mhat;
  std::vector<double> final_ratio;        // (lambda_j - lambda0)/eps^{1+2s} at smallest eps
  std::vector<double> final_relative_error;  // vs lambda^4_j
  std::vector<std::vector<double>> ratios;   // [eps index][j]
  bool monotone = true;
};

// For each eps the lowest k eigenvalues of the rescaled operator; log-log
// slope of |lambda_j(eps) - lambda0| and the ratios to M-hat's eigenvalues.
// Non-monotone splittings are flagged in sweep.flags.
SplittingFit splitting_fit(const RescaledSystem& sys, std::vector<double> eps_list);

}  // namespace nodalfrac::perturb
