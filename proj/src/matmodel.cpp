#include "nodalfrac/matmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nodalfrac/error.hpp"

namespace nodalfrac::matmodel {

char sign_char(Sign s) {
  switch (s) {
    case Sign::minus: return '-';
    case Sign::plus: return '+';
    default: return '0';
  }
}

std::string SignChangeReport::pattern_string() const {
  std::string out;
  out.reserve(pattern.size());
  for (Sign s : pattern) out.push_back(sign_char(s));
  return out;
}

SignChangeReport count_sign_changes(std::span<const double> values, double tau_rel) {
  require(!values.empty(), "count_sign_changes: empty vector");
  require(tau_rel >= 0, "count_sign_changes: negative tolerance");
  double peak = 0;
  for (double v : values) {
    require(std::isfinite(v), "count_sign_changes: non-finite entry");
    peak = std::max(peak, std::abs(v));
  }
  require(peak > 0, "count_sign_changes: all-zero vector");

  SignChangeReport report;
  report.tolerance = tau_rel;
  report.pattern.reserve(values.size());
  const double cut = tau_rel * peak;
  Sign last = Sign::zero;
  for (double v : values) {
    Sign s = Sign::zero;
    if (std::abs(v) > cut) s = v > 0 ? Sign::plus : Sign::minus;
    report.pattern.push_back(s);
    if (s == Sign::zero) continue;
    if (last != Sign::zero && s != last) ++report.changes;
    last = s;
  }
  return report;
}

Eigen::Matrix3d ReducedMatrix::matrix() const {
  Eigen::Matrix3d m;
  m << U, c, b,
       c, V, a,
       b, a, W;
  return m;
}

double ReducedMatrix::entry(int row, int col) const {
  require(row >= 1 && row <= 3 && col >= 1 && col <= 3, "ReducedMatrix::entry: index out of range");
  return matrix()(row - 1, col - 1);
}

double ReducedMatrix::norm() const { return matrix().norm(); }

ReducedMatrix ReducedMatrix::shifted(double sigma) const {
  ReducedMatrix out = *this;
  out.U += sigma;
  out.V += sigma;
  out.W += sigma;
  return out;
}

ReducedMatrix assemble_reduced(double U, double V, double W, double a, double b, double c) {
  for (double v : {U, V, W, a, b, c}) require(std::isfinite(v), "assemble_reduced: non-finite entry");
  require(a < 0 && b < 0 && c < 0, "assemble_reduced: couplings a, b, c must be negative");
  require(std::abs(b) < std::abs(a) && std::abs(b) < std::abs(c),
          "assemble_reduced: need |b| < |a| and |b| < |c|");
  return ReducedMatrix{U, V, W, a, b, c};
}

ReducedMatrix assemble_normalized(const WellCoordinates& w) {
  require(std::isfinite(w.X) && std::isfinite(w.Z), "assemble_normalized: non-finite offset");
  // Validate couplings before dividing by them.
  assemble_reduced(0, 0, 0, w.a, w.b, w.c);
  return assemble_reduced(w.b * w.c / w.a + w.X, w.a * w.c / w.b, w.a * w.b / w.c + w.Z, w.a, w.b, w.c);
}

Eigensystem jacobi_eigensystem(const Eigen::MatrixXd& symmetric) {
  const Eigen::Index n = symmetric.rows();
  require(n > 0 && symmetric.cols() == n, "jacobi_eigensystem: matrix must be square");
  Eigen::MatrixXd a = 0.5 * (symmetric + symmetric.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-17 * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        // Rotation angle that annihilates a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = cs * akp - sn * akq;
          a(k, q) = sn * akp + cs * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = cs * apk - sn * aqk;
          a(q, k) = sn * apk + cs * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = cs * vkp - sn * vkq;
          v(k, q) = sn * vkp + cs * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });
  Eigensystem out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = a(order[j], order[j]);
    out.vectors.col(j) = v.col(order[j]).normalized();
  }
  return out;
}

Eigensystem eigendecompose(const ReducedMatrix& m) { return jacobi_eigensystem(m.matrix()); }

GroundState ground_state_positivity(const ReducedMatrix& m) {
  const Eigensystem es = eigendecompose(m);
  GroundState g;
  g.lambda = es.values(0);
  g.gap = es.values(1) - es.values(0);
  if (g.gap <= kDegeneracyTolerance * m.norm())
    throw NumericalError("ground_state_positivity: minimum eigenvalue is degenerate");
  Eigen::Vector3d v = es.vectors.col(0);
  if (v.sum() < 0) v = -v;
  if (!(v.array() > 0).all())
    throw NumericalError("ground_state_positivity: ground eigenvector is not one-signed");
  g.vector = v;
  return g;
}

namespace {

// Middle entry positive; when it is zero, the first non-zero entry positive.
Eigen::Vector3d canonical_sign(Eigen::Vector3d v, double tau) {
  const double cut = tau * v.cwiseAbs().maxCoeff();
  if (std::abs(v(1)) > cut) return v(1) < 0 ? Eigen::Vector3d(-v) : v;
  for (int i = 0; i < 3; ++i)
    if (std::abs(v(i)) > cut) return v(i) < 0 ? Eigen::Vector3d(-v) : v;
  return v;
}

}  // namespace

SecondEigenClass classify_second_eigenvector(const WellCoordinates& coords, double tau) {
  require(coords.X != 0.0 || coords.Z != 0.0, "classify_second_eigenvector: (X, Z) = (0, 0) is degenerate");
  const ReducedMatrix m = assemble_normalized(coords);
  const Eigensystem es = eigendecompose(m);

  SecondEigenClass out;
  out.lambda2 = es.values(1);
  out.gap = std::min(es.values(1) - es.values(0), es.values(2) - es.values(1));
  const double scale = m.norm();
  out.lambda2_sign = std::abs(out.lambda2) <= tau * scale ? 0 : (out.lambda2 > 0 ? 1 : -1);
  if (out.gap < tau * scale) {
    out.near_degenerate = true;
    out.vector = es.vectors.col(1);
    out.report.tolerance = tau;
    return out;
  }
  out.vector = canonical_sign(es.vectors.col(1), tau);
  out.report = count_sign_changes(std::span<const double>(out.vector.data(), 3), tau);
  return out;
}

namespace {

WellCoordinates unit_bc(const WellCoordinates& coords) {
  assemble_normalized(coords);
  const double t = 1.0 / std::hypot(coords.b, coords.c);
  WellCoordinates n = coords;
  n.a *= t;
  n.b *= t;
  n.c *= t;
  return n;
}

}  // namespace

Sensitivity eigen_sensitivity(const WellCoordinates& coords) {
  require(coords.Z == 0.0, "eigen_sensitivity: requires Z = 0");
  require(coords.X != 0.0, "eigen_sensitivity: X = 0 is singular");
  Sensitivity out;
  out.normalized = unit_bc(coords);
  const auto& n = out.normalized;
  out.dlambda = n.c * n.c;
  out.dx = n.b * n.b * n.c * n.c / (n.a * n.X);
  return out;
}

Sensitivity sensitivity_finite_difference(const WellCoordinates& coords, double step) {
  require(coords.Z == 0.0, "sensitivity_finite_difference: requires Z = 0");
  require(coords.X != 0.0, "sensitivity_finite_difference: X = 0 is singular");
  require(step > 0, "sensitivity_finite_difference: step must be positive");
  Sensitivity out;
  out.normalized = unit_bc(coords);
  const auto& n = out.normalized;
  const Eigen::Vector3d branch(0.0, -n.b, n.c);

  auto track = [&](double z) {
    WellCoordinates p = n;
    p.Z = z;
    const Eigensystem es = eigendecompose(assemble_normalized(p));
    Eigen::Index idx = 0;
    es.values.cwiseAbs().minCoeff(&idx);
    Eigen::Vector3d v = es.vectors.col(idx);
    if (v.dot(branch) < 0) v = -v;
    return std::pair{es.values(idx), v};
  };
  const auto [lp, vp] = track(step);
  const auto [lm, vm] = track(-step);
  out.dlambda = (lp - lm) / (2 * step);
  out.dx = (vp(0) - vm(0)) / (2 * step);
  return out;
}

double rayleigh_energy(const ReducedMatrix& m, const Eigen::Vector3d& v) {
  const double nn = v.squaredNorm();
  require(nn > 0, "rayleigh_energy: zero vector");
  return v.dot(m.matrix() * v) / nn;
}

std::array<double, 3> CouplingSampler::operator()(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> outer(-1.0, -0.3);
  const double a = outer(rng);
  const double c = outer(rng);
  const double lo = -std::min(std::abs(a), std::abs(c)) + margin;
  std::uniform_real_distribution<double> inner(lo, -0.05);
  return {a, inner(rng), c};
}

std::vector<PhaseRecord> phase_scan(double a, double b, double c, int grid, double tau) {
  require(grid >= 2, "phase_scan: grid must have at least two points per axis");
  std::vector<PhaseRecord> out;
  out.reserve(static_cast<std::size_t>(grid) * grid);
  const double step = 2.0 / (grid - 1);
  for (int i = 0; i < grid; ++i) {
    // Snap the midpoint of an odd grid onto the axis exactly.
    const double X = 2 * i == grid - 1 ? 0.0 : -1.0 + step * i;
    if (X == 0.0) continue;
    for (int j = 0; j < grid; ++j) {
      const double Z = 2 * j == grid - 1 ? 0.0 : -1.0 + step * j;
      if (Z == 0.0) continue;
      const SecondEigenClass cls = classify_second_eigenvector({X, Z, a, b, c}, tau);
      PhaseRecord r;
      r.X = X;
      r.Z = Z;
      r.lambda2 = cls.lambda2;
      r.near_degenerate = cls.near_degenerate;
      r.changes = cls.near_degenerate ? -1 : cls.report.changes;
      r.pattern = cls.near_degenerate ? "degenerate" : cls.report.pattern_string();
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace nodalfrac::matmodel
