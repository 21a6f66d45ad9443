#include "nodalfrac/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include "nodalfrac/error.hpp"

namespace nodalfrac::discretize {

namespace {

constexpr double kAlignTolerance = 1e-9;

bool finite_all(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Domain::Domain(std::vector<Interval> components) : components_(std::move(components)) {
  require(!components_.empty(), "Domain: no components");
  std::sort(components_.begin(), components_.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    require(finite_all({c.lo, c.hi}) && c.lo < c.hi, "Domain: component must satisfy lo < hi");
    if (i > 0) require(components_[i - 1].hi <= c.lo, "Domain: components overlap");
  }
}

Domain Domain::interval(double lo, double hi) { return Domain({Interval{lo, hi}}); }

double Domain::measure() const {
  double m = 0;
  for (const auto& c : components_) m += c.width();
  return m;
}

int Domain::locate(double x) const {
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (x > components_[i].lo && x < components_[i].hi) return static_cast<int>(i);
  return -1;
}

IntervalUnion::IntervalUnion(std::vector<double> centers, double half_width)
    : centers_(std::move(centers)), half_width_(half_width) {
  require(!centers_.empty(), "IntervalUnion: no centers");
  require(std::isfinite(half_width_) && half_width_ > 0, "IntervalUnion: half width must be positive");
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    const double x = centers_[i];
    require(std::isfinite(x), "IntervalUnion: non-finite center");
    if (i > 0) require(centers_[i - 1] < x, "IntervalUnion: centers must be strictly increasing");
    require(2 * half_width_ < 1.0 - std::abs(x),
            "IntervalUnion: 2 eps must be smaller than the distance of every center to +-1");
    if (i > 0)
      require(2 * half_width_ < x - centers_[i - 1],
              "IntervalUnion: 2 eps must be smaller than every center gap");
  }
}

Domain IntervalUnion::domain() const {
  std::vector<Interval> parts;
  parts.reserve(centers_.size());
  for (double x : centers_) parts.push_back({x - half_width_, x + half_width_});
  return Domain(std::move(parts));
}

double UniformGrid::measure() const {
  double m = 0;
  for (double w : widths) m += w;
  return m;
}

bool UniformGrid::uniform() const {
  if (component_h.empty()) return true;
  const double h0 = component_h.front();
  return std::all_of(component_h.begin(), component_h.end(),
                     [&](double h) { return std::abs(h - h0) <= 1e-12 * h0; });
}

double UniformGrid::h() const {
  require(!component_h.empty(), "UniformGrid::h: empty grid");
  require(uniform(), "UniformGrid::h: cell width differs between components");
  return component_h.front();
}

std::vector<bool> UniformGrid::cells_in(const Domain& region) const {
  std::vector<bool> inside(size(), false);
  for (std::size_t i = 0; i < size(); ++i) {
    const double lo = cell_lo(i), hi = cell_hi(i);
    const double tol = kAlignTolerance * widths[i];
    for (const auto& c : region.components()) {
      const double overlap = std::min(hi, c.hi) - std::max(lo, c.lo);
      if (overlap <= tol) continue;
      require(lo >= c.lo - tol && hi <= c.hi + tol,
              "cells_in: region boundary is not aligned with the grid cells");
      inside[i] = true;
    }
  }
  return inside;
}

UniformGrid UniformGrid::restrict_to(const Domain& region) const {
  const std::vector<bool> inside = cells_in(region);
  UniformGrid g;
  g.domain = region;
  g.component_h.assign(region.components().size(), 0.0);
  double covered = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!inside[i]) continue;
    const int comp = region.locate(nodes[i]);
    g.nodes.push_back(nodes[i]);
    g.widths.push_back(widths[i]);
    g.component.push_back(comp);
    g.component_h[static_cast<std::size_t>(comp)] = widths[i];
    covered += widths[i];
  }
  for (double h : g.component_h) require(h > 0, "restrict_to: region component contains no cells");
  require(std::abs(covered - region.measure()) <= 1e-9 * region.measure(),
          "restrict_to: region is not covered by grid cells");
  return g;
}

void UniformGrid::write_csv(std::ostream& os) const {
  os << "index,x,h,component\n";
  os.precision(17);
  for (std::size_t i = 0; i < size(); ++i)
    os << i << ',' << nodes[i] << ',' << widths[i] << ',' << component[i] << '\n';
}

UniformGrid build_grid(const Domain& domain, double n_per_unit_length) {
  require(std::isfinite(n_per_unit_length) && n_per_unit_length > 0,
          "build_grid: cells per unit length must be positive");
  UniformGrid g;
  g.domain = domain;
  for (std::size_t k = 0; k < domain.components().size(); ++k) {
    const Interval& c = domain.components()[k];
    const double cells = std::round(c.width() * n_per_unit_length);
    require(cells >= 2, "build_grid: component narrower than two cells");
    require(cells <= 1e6, "build_grid: too many cells");
    const auto n = static_cast<std::size_t>(cells);
    const double h = c.width() / cells;
    g.component_h.push_back(h);
    for (std::size_t i = 0; i < n; ++i) {
      g.nodes.push_back(c.lo + h * (static_cast<double>(i) + 0.5));
      g.widths.push_back(h);
      g.component.push_back(static_cast<int>(k));
    }
  }
  return g;
}

double fractional_constant(double s) {
  require(s > 0 && s < 1, "fractional_constant: s must lie in (0, 1)");
  return s * std::pow(4.0, s) * std::tgamma(0.5 + s) /
         (std::sqrt(std::numbers::pi) * std::tgamma(1.0 - s));
}

double cell_kernel_integral(double d, double w, double s) {
  const double t = 0.5 * w / d;
  const double e = -2.0 * s;
  return std::pow(d, e) * (std::expm1(e * std::log1p(-t)) - std::expm1(e * std::log1p(t))) / (2.0 * s);
}

double kappa(double x, const Domain& domain, double s) {
  return kappa(x, domain, s, fractional_constant(s));
}

double kappa(double x, const Domain& domain, double s, double c_s) {
  require(s > 0 && s < 1, "kappa: s must lie in (0, 1)");
  require(domain.locate(x) >= 0, "kappa: x must lie in the interior of the domain");
  const double e = -2.0 * s;
  const auto& parts = domain.components();
  double sum = std::pow(x - parts.front().lo, e) + std::pow(parts.back().hi - x, e);
  for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
    const double alpha = parts[k].hi, beta = parts[k + 1].lo;
    if (beta <= alpha) continue;
    if (beta <= x)
      sum += std::pow(x - beta, e) - std::pow(x - alpha, e);
    else
      sum += std::pow(alpha - x, e) - std::pow(beta - x, e);
  }
  return c_s * sum / (2.0 * s);
}

PotentialSpec PotentialSpec::infinite(const IntervalUnion& u, std::vector<double> values) {
  PotentialSpec p{u.domain(), std::move(values), std::nullopt, 1.0};
  p.validate();
  return p;
}

PotentialSpec PotentialSpec::finite(const IntervalUnion& u, std::vector<double> values, double delta) {
  PotentialSpec p{u.domain(), std::move(values), delta, 1.0};
  p.validate();
  return p;
}

void PotentialSpec::validate() const {
  require(well_values.size() == wells.components().size(),
          "PotentialSpec: one value per well required");
  for (double v : well_values) require(std::isfinite(v), "PotentialSpec: well values must be finite");
  require(std::isfinite(strength), "PotentialSpec: strength must be finite");
  if (delta) require(std::isfinite(*delta) && *delta > 0, "PotentialSpec: delta must be positive");
}

double DiscreteOperator::symmetry_defect() const {
  const double peak = matrix.cwiseAbs().maxCoeff();
  if (peak == 0) return 0;
  return (matrix - matrix.transpose()).cwiseAbs().maxCoeff() / peak;
}

namespace {

constexpr char kMagic[8] = {'N', 'F', 'O', 'P', '0', '0', '0', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  require(static_cast<bool>(is), "read_binary: truncated operator file");
  return v;
}

}  // namespace

void DiscreteOperator::write_binary(std::ostream& os) const {
  os.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(os, size());
  put<double>(os, s);
  put<double>(os, grid.uniform() ? grid.h() : std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) put<double>(os, matrix(i, j));
}

DiscreteOperator DiscreteOperator::read_binary(std::istream& is) {
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  require(static_cast<bool>(is) && std::memcmp(magic, kMagic, sizeof kMagic) == 0,
          "read_binary: not an operator file");
  const auto n = get<std::uint64_t>(is);
  require(n > 0 && n <= 100000, "read_binary: implausible size");
  DiscreteOperator op;
  op.s = get<double>(is);
  const double h = get<double>(is);
  require(op.s > 0 && op.s < 1, "read_binary: s out of range");
  require(std::isfinite(h) && h > 0, "read_binary: only uniform grids are supported");
  op.c_s = fractional_constant(op.s);
  const double half = 0.5 * h * static_cast<double>(n);
  op.grid = build_grid(Domain::interval(-half, half), 1.0 / h);
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) op.matrix(i, j) = get<double>(is);
  op.potential = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return op;
}

DiscreteOperator assemble_fractional(const UniformGrid& grid, double s) {
  return assemble_fractional(grid, s, fractional_constant(s));
}

DiscreteOperator assemble_fractional(const UniformGrid& grid, double s, double c_s) {
  require(s > 0 && s < 1, "assemble_fractional: s must lie in (0, 1)");
  require(std::isfinite(c_s) && c_s > 0, "assemble_fractional: c_s must be positive");
  require(grid.size() >= 2, "assemble_fractional: grid needs at least two cells");
  const auto n = static_cast<Eigen::Index>(grid.size());
  DiscreteOperator op;
  op.grid = grid;
  op.s = s;
  op.c_s = c_s;
  op.potential = Eigen::VectorXd::Zero(n);
  op.matrix.resize(n, n);
  const double e = -2.0 * s;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = grid.widths[static_cast<std::size_t>(i)];
    // Kernel mass outside cell i, both sides.
    op.matrix(i, i) = c_s * 2.0 * std::pow(0.5 * hi, e) / (2.0 * s);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = grid.widths[static_cast<std::size_t>(j)];
      const double d = std::abs(grid.nodes[static_cast<std::size_t>(i)] - grid.nodes[static_cast<std::size_t>(j)]);
      double v = cell_kernel_integral(d, hj, s);
      if (hi != hj) v = 0.5 * (v + cell_kernel_integral(d, hi, s));
      op.matrix(i, j) = op.matrix(j, i) = -c_s * v;
    }
  }
  return op;
}

DiscreteOperator add_potential(const DiscreteOperator& op, const PotentialSpec& p) {
  p.validate();
  const std::vector<bool> inside = op.grid.cells_in(p.wells);
  const auto n = static_cast<Eigen::Index>(op.size());
  Eigen::VectorXd pot(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (inside[ui]) {
      const int w = p.wells.locate(op.grid.nodes[ui]);
      pot(i) = p.strength * p.well_values[static_cast<std::size_t>(w)];
    } else {
      pot(i) = p.delta ? 1.0 / *p.delta : 0.0;
    }
  }

  DiscreteOperator out;
  out.s = op.s;
  out.c_s = op.c_s;
  if (p.delta) {
    out.grid = op.grid;
    out.matrix = op.matrix;
    out.matrix.diagonal() += pot;
    out.potential = op.potential + pot;
    return out;
  }

  // Infinite barrier: keep the well rows and columns only.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (inside[static_cast<std::size_t>(i)]) keep.push_back(i);
  require(!keep.empty(), "add_potential: wells contain no grid cells");
  out.grid = op.grid.restrict_to(p.wells);
  const auto m = static_cast<Eigen::Index>(keep.size());
  out.matrix.resize(m, m);
  out.potential.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) out.matrix(a, b) = op.matrix(keep[a], keep[b]);
    out.matrix(a, a) += pot(keep[a]);
    out.potential(a) = op.potential(keep[a]) + pot(keep[a]);
  }
  return out;
}

}  // namespace nodalfrac::discretize
