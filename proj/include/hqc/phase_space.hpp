#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hqc/polynomial.hpp"

namespace hqc {

using Complex = std::complex<double>;
using RealField = Eigen::ArrayXd;
using ComplexField = Eigen::ArrayXcd;

/// Raised when a run loses numerical integrity (mass or trace drift,
/// negativity beyond tolerance, boundary contamination). Distinct from
/// std::invalid_argument, which flags bad inputs before any compute.
class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhasePoint {
  double q = 0.0;
  double p = 0.0;
};

/// Uniform periodic cell-centred discretisation of [q_min,q_max) x [p_min,p_max).
/// Storage is row-major with q as the slow index: node (i, j) lives at i*n_p + j.
class PhaseGrid {
 public:
  static constexpr int kMinCells = 8;

  PhaseGrid() = default;
  PhaseGrid(double q_min, double q_max, double p_min, double p_max, int n_q, int n_p);

  double q_min() const { return q_min_; }
  double q_max() const { return q_max_; }
  double p_min() const { return p_min_; }
  double p_max() const { return p_max_; }
  int n_q() const { return n_q_; }
  int n_p() const { return n_p_; }
  double dq() const { return dq_; }
  double dp() const { return dp_; }
  double cell_area() const { return dq_ * dp_; }
  std::size_t size() const { return static_cast<std::size_t>(n_q_) * static_cast<std::size_t>(n_p_); }

  double q(int i) const { return q_min_ + (i + 0.5) * dq_; }
  double p(int j) const { return p_min_ + (j + 0.5) * dp_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_p_ + j; }
  PhasePoint node(std::size_t n) const {
    return {q(static_cast<int>(n / n_p_)), p(static_cast<int>(n % n_p_))};
  }
  bool contains(double q, double p) const {
    return q >= q_min_ && q < q_max_ && p >= p_min_ && p < p_max_;
  }

  bool operator==(const PhaseGrid&) const = default;

 private:
  double q_min_ = 0.0, q_max_ = 1.0, p_min_ = 0.0, p_max_ = 1.0;
  int n_q_ = kMinCells, n_p_ = kMinCells;
  double dq_ = 1.0 / kMinCells, dp_ = 1.0 / kMinCells;
};

PhaseGrid make_grid(double q_min, double q_max, double p_min, double p_max, int n_q, int n_p);

/// Grid quadrature: sum(values) * cell_area, summed row by row in a fixed
/// order so the result does not depend on the thread count.
double quadrature(const PhaseGrid& grid, const RealField& values);
Complex quadrature(const PhaseGrid& grid, const ComplexField& values);

/// Samples f at every node.
RealField sample(const PhaseGrid& grid, const Polynomial& f);

/// Non-negative, unit-mass density on a grid.
class ClassicalDensity {
 public:
  static constexpr double kDefaultNegativityTolerance = 1e-12;
  static constexpr double kNormalizationTolerance = 1e-8;

  /// Validates non-negativity (relative to the maximum) and unit mass.
  static ClassicalDensity from_values(PhaseGrid grid, RealField values,
                                      double eps_neg_rel = kDefaultNegativityTolerance);
  /// Clamps nothing; rescales to unit mass. Rejects negative or zero-mass input.
  static ClassicalDensity normalized(PhaseGrid grid, RealField values);

  const PhaseGrid& grid() const { return grid_; }
  const RealField& values() const { return values_; }
  double mass() const { return quadrature(grid_, values_); }

 private:
  ClassicalDensity(PhaseGrid grid, RealField values) : grid_(grid), values_(std::move(values)) {}

  PhaseGrid grid_;
  RealField values_;
};

enum class HamiltonianKind { kLinearP, kHarmonic, kPolynomial };

/// Classical generator H(q, p). The catalog forms are stored through the
/// same polynomial table so derivatives are always closed-form.
class ClassicalHamiltonian {
 public:
  ClassicalHamiltonian() = default;

  static ClassicalHamiltonian linear_p(double velocity);
  static ClassicalHamiltonian harmonic();
  static ClassicalHamiltonian polynomial(const Polynomial& f);
  static ClassicalHamiltonian zero() { return polynomial(Polynomial{}); }

  HamiltonianKind kind() const { return kind_; }
  const Polynomial& as_polynomial() const { return f_; }

  double operator()(double q, double p) const { return f_(q, p); }
  double d_dq(double q, double p) const { return f_.d_dq(q, p); }
  double d_dp(double q, double p) const { return f_.d_dp(q, p); }

  /// s * H, keeping the catalog kind when it survives scaling.
  ClassicalHamiltonian scaled(double s) const;
  bool is_zero() const { return f_.is_zero(); }
  bool is_affine() const { return f_.is_affine(); }
  std::string describe() const;

 private:
  ClassicalHamiltonian(HamiltonianKind kind, Polynomial f) : kind_(kind), f_(f) {}

  HamiltonianKind kind_ = HamiltonianKind::kPolynomial;
  Polynomial f_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PhasePoint> points;

  /// Point at time t. Exact node when t hits a stored time (to 1e-12),
  /// otherwise linear interpolation between neighbours.
  PhasePoint at(double t) const;
};

ClassicalDensity gaussian_state(const PhaseGrid& grid, double q0, double p0, double sigma_q,
                                double sigma_p);

/// Quadrature of f * rho (the phase-space integral form of the mean value).
double mean_observable(const Polynomial& f, const ClassicalDensity& rho);

/// Same mean computed as Tr(F rho) / Tr(rho) with F and rho represented as
/// diagonal operator kernels on the grid basis (delta(0) regularised as
/// 1/cell_area). Kept as an independent route to check the integral form.
double mean_observable_trace_form(const Polynomial& f, const ClassicalDensity& rho);

/// Hamiltonian characteristics dq/dt = dH/dp, dp/dt = -dH/dq by the implicit
/// midpoint rule (symplectic, second order, exact for affine H and
/// energy-conserving for quadratic H). The last step is shortened so the
/// final time is t_final exactly.
Trajectory flow_trajectory(const ClassicalHamiltonian& h, double q0, double p0, double t_final,
                           double dt);

/// One implicit-midpoint step of size dt (negative dt integrates backward).
PhasePoint midpoint_step(const ClassicalHamiltonian& h, PhasePoint x, double dt);

}  // namespace hqc
