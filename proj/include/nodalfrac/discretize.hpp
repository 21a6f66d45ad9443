#pragma once

// Piecewise-constant collocation of the restricted fractional Laplacian on a
// union of intervals. Row i of the operator realizes
//
//   c_s PV int (u(x_i) - u(y)) |x_i - y|^{-1-2s} dy
//
// for u constant on each cell and zero off the domain. Off-diagonal entries
// are the exact cell integrals of the kernel; the diagonal is the kernel mass
// outside cell i, so that A * 1 reproduces the exterior kernel kappa.

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nodalfrac::discretize {

struct Interval {
  double lo = 0, hi = 0;
  double width() const { return hi - lo; }
};

/// Sorted, pairwise disjoint open intervals.
class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<Interval> components);

  static Domain interval(double lo, double hi);

  const std::vector<Interval>& components() const { return components_; }
  double measure() const;
  // Index of the component containing x in its interior, or -1.
  int locate(double x) const;

 private:
  std::vector<Interval> components_;
};

/// Wells (x_i - eps, x_i + eps) inside the enclosing interval (-1, 1).
class IntervalUnion {
 public:
  IntervalUnion(std::vector<double> centers, double half_width);

  const std::vector<double>& centers() const { return centers_; }
  double half_width() const { return half_width_; }
  std::size_t size() const { return centers_.size(); }
  Domain domain() const;
  static Domain enclosing() { return Domain::interval(-1.0, 1.0); }

 private:
  std::vector<double> centers_;
  double half_width_;
};

/// Cell-midpoint grid; uniform cell width inside each domain component.
struct UniformGrid {
  Domain domain;
  std::vector<double> nodes;
  std::vector<double> widths;     // cell width per node
  std::vector<int> component;     // domain component per node
  std::vector<double> component_h;

  std::size_t size() const { return nodes.size(); }
  double measure() const;
  bool uniform() const;  // one h across all components
  double h() const;      // common h; throws if not uniform
  double cell_lo(std::size_t i) const { return nodes[i] - 0.5 * widths[i]; }
  double cell_hi(std::size_t i) const { return nodes[i] + 0.5 * widths[i]; }

  // Nodes whose cells lie inside `region`. Throws InputError when some cell
  // straddles a region boundary.
  std::vector<bool> cells_in(const Domain& region) const;
  // Grid on `region` made of the selected cells (same nodes and widths).
  UniformGrid restrict_to(const Domain& region) const;

  void write_csv(std::ostream& os) const;  // header: index,x,h,component
};

// round(width * n_per_unit_length) cells per component. Components narrower
// than two cells are rejected.
UniformGrid build_grid(const Domain& domain, double n_per_unit_length);

// c_{1,s} = s 4^s Gamma(1/2 + s) / (sqrt(pi) Gamma(1 - s)); 1/pi at s = 1/2.
double fractional_constant(double s);

// int_{d - w/2}^{d + w/2} t^{-1-2s} dt for d > w/2, evaluated without the
// cancellation of the naive power difference.
double cell_kernel_integral(double d, double w, double s);

// c_s int_{R \ domain} |x - y|^{-1-2s} dy in closed form. x must lie in the
// interior of the domain.
double kappa(double x, const Domain& domain, double s);
double kappa(double x, const Domain& domain, double s, double c_s);

/// Potential on a well geometry: V_i on well i (times strength) and either a
/// finite barrier 1/delta on the rest of the grid or an infinite barrier.
struct PotentialSpec {
  Domain wells;
  std::vector<double> well_values;
  std::optional<double> delta;  // empty: infinite barrier
  double strength = 1.0;

  static PotentialSpec infinite(const IntervalUnion& u, std::vector<double> values);
  static PotentialSpec finite(const IntervalUnion& u, std::vector<double> values, double delta);
  void validate() const;
};

struct DiscreteOperator {
  Eigen::MatrixXd matrix;
  UniformGrid grid;
  double s = 0.5;
  double c_s = 0.0;
  Eigen::VectorXd potential;  // diagonal potential already added to matrix

  std::size_t size() const { return grid.size(); }
  double symmetry_defect() const;  // max|A_ij - A_ji| / max|A_ij|
  void write_binary(std::ostream& os) const;
  static DiscreteOperator read_binary(std::istream& is);
};

DiscreteOperator assemble_fractional(const UniformGrid& grid, double s);
DiscreteOperator assemble_fractional(const UniformGrid& grid, double s, double c_s);

// A + diag(V(x_i)). An infinite barrier restricts the operator to the well
// cells, which equals assembling on the well grid directly.
DiscreteOperator add_potential(const DiscreteOperator& op, const PotentialSpec& p);

}  // namespace nodalfrac::discretize
