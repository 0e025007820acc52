#include "hqc/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace hqc {

PhaseGrid::PhaseGrid(double q_min, double q_max, double p_min, double p_max, int n_q, int n_p)
    : q_min_(q_min), q_max_(q_max), p_min_(p_min), p_max_(p_max), n_q_(n_q), n_p_(n_p) {
  if (!std::isfinite(q_min) || !std::isfinite(q_max) || !std::isfinite(p_min) ||
      !std::isfinite(p_max)) {
    throw std::invalid_argument("grid bounds must be finite");
  }
  if (!(q_max > q_min) || !(p_max > p_min)) {
    throw std::invalid_argument("grid bounds must satisfy q_max > q_min and p_max > p_min");
  }
  if (n_q < kMinCells || n_p < kMinCells) {
    throw std::invalid_argument("grid cell count below minimum of " + std::to_string(kMinCells) +
                                " (n_q=" + std::to_string(n_q) + ", n_p=" + std::to_string(n_p) +
                                ")");
  }
  dq_ = (q_max - q_min) / n_q;
  dp_ = (p_max - p_min) / n_p;
}

PhaseGrid make_grid(double q_min, double q_max, double p_min, double p_max, int n_q, int n_p) {
  return PhaseGrid(q_min, q_max, p_min, p_max, n_q, n_p);
}

namespace {

template <class Scalar, class Array>
Scalar row_ordered_sum(const PhaseGrid& grid, const Array& values) {
  const int n_q = grid.n_q();
  const int n_p = grid.n_p();
  std::vector<Scalar> rows(static_cast<std::size_t>(n_q), Scalar{});
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_q; ++i) {
    Scalar s{};
    const std::size_t base = grid.index(i, 0);
    for (int j = 0; j < n_p; ++j) s += values[base + j];
    rows[i] = s;
  }
  Scalar total{};
  for (const Scalar& r : rows) total += r;
  return total;
}

}  // namespace

double quadrature(const PhaseGrid& grid, const RealField& values) {
  return row_ordered_sum<double>(grid, values) * grid.cell_area();
}

Complex quadrature(const PhaseGrid& grid, const ComplexField& values) {
  return row_ordered_sum<Complex>(grid, values) * grid.cell_area();
}

RealField sample(const PhaseGrid& grid, const Polynomial& f) {
  RealField out(static_cast<Eigen::Index>(grid.size()));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < grid.n_q(); ++i) {
    for (int j = 0; j < grid.n_p(); ++j) out[grid.index(i, j)] = f(grid.q(i), grid.p(j));
  }
  if (!out.allFinite()) throw std::invalid_argument("observable is not finite on the grid");
  return out;
}

ClassicalDensity ClassicalDensity::from_values(PhaseGrid grid, RealField values,
                                               double eps_neg_rel) {
  if (static_cast<std::size_t>(values.size()) != grid.size()) {
    throw std::invalid_argument("density size does not match grid");
  }
  if (!values.allFinite()) throw std::invalid_argument("density has non-finite values");
  const double floor = -eps_neg_rel * values.maxCoeff();
  if (values.minCoeff() < floor) {
    throw std::invalid_argument("density has values below the negativity tolerance");
  }
  const double m = quadrature(grid, values);
  if (std::abs(m - 1.0) > kNormalizationTolerance) {
    std::ostringstream os;
    os << "density mass " << m << " differs from 1 by more than " << kNormalizationTolerance;
    throw std::invalid_argument(os.str());
  }
  return ClassicalDensity(grid, std::move(values));
}

ClassicalDensity ClassicalDensity::normalized(PhaseGrid grid, RealField values) {
  if (static_cast<std::size_t>(values.size()) != grid.size()) {
    throw std::invalid_argument("density size does not match grid");
  }
  if (!values.allFinite() || values.minCoeff() < 0.0) {
    throw std::invalid_argument("density must be finite and non-negative before normalisation");
  }
  const double m = quadrature(grid, values);
  if (!(m > 0.0)) throw std::invalid_argument("density has zero mass");
  values /= m;
  return ClassicalDensity(grid, std::move(values));
}

ClassicalHamiltonian ClassicalHamiltonian::linear_p(double velocity) {
  return ClassicalHamiltonian(HamiltonianKind::kLinearP, Polynomial::monomial(0, 1, velocity));
}

ClassicalHamiltonian ClassicalHamiltonian::harmonic() {
  return ClassicalHamiltonian(HamiltonianKind::kHarmonic,
                              Polynomial::monomial(2, 0, 0.5) + Polynomial::monomial(0, 2, 0.5));
}

ClassicalHamiltonian ClassicalHamiltonian::polynomial(const Polynomial& f) {
  if (!f.all_finite()) throw std::invalid_argument("Hamiltonian coefficients must be finite");
  return ClassicalHamiltonian(HamiltonianKind::kPolynomial, f);
}

ClassicalHamiltonian ClassicalHamiltonian::scaled(double s) const {
  const HamiltonianKind k =
      (kind_ == HamiltonianKind::kLinearP) ? kind_ : HamiltonianKind::kPolynomial;
  return ClassicalHamiltonian(s == 1.0 ? kind_ : k, f_ * s);
}

std::string ClassicalHamiltonian::describe() const {
  switch (kind_) {
    case HamiltonianKind::kLinearP:
    {
      std::ostringstream os;
      os << "linear_p(v=" << f_.coefficient(0, 1) << ")";
      return os.str();
    }
    case HamiltonianKind::kHarmonic:
      return "harmonic (p^2+q^2)/2";
    case HamiltonianKind::kPolynomial:
      break;
  }
  return "polynomial " + f_.to_string();
}

PhasePoint Trajectory::at(double t) const {
  if (times.empty()) throw std::invalid_argument("empty trajectory");
  if (t < times.front() - 1e-12 || t > times.back() + 1e-12) {
    throw std::out_of_range("time outside trajectory range");
  }
  auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
  std::size_t k = static_cast<std::size_t>(it - times.begin());
  if (k >= times.size()) k = times.size() - 1;
  if (std::abs(times[k] - t) <= 1e-12 || k == 0) return points[k];
  const double t0 = times[k - 1], t1 = times[k];
  const double w = (t - t0) / (t1 - t0);
  return {points[k - 1].q + w * (points[k].q - points[k - 1].q),
          points[k - 1].p + w * (points[k].p - points[k - 1].p)};
}

ClassicalDensity gaussian_state(const PhaseGrid& grid, double q0, double p0, double sigma_q,
                                double sigma_p) {
  if (!grid.contains(q0, p0)) throw std::invalid_argument("Gaussian centre lies outside the grid");
  if (!(sigma_q >= 2.0 * grid.dq())) {
    throw std::invalid_argument("sigma_q=" + std::to_string(sigma_q) +
                                " is under-resolved; minimum width is 2*dq=" +
                                std::to_string(2.0 * grid.dq()));
  }
  if (!(sigma_p >= 2.0 * grid.dp())) {
    throw std::invalid_argument("sigma_p=" + std::to_string(sigma_p) +
                                " is under-resolved; minimum width is 2*dp=" +
                                std::to_string(2.0 * grid.dp()));
  }
  RealField v(static_cast<Eigen::Index>(grid.size()));
  const double aq = 0.5 / (sigma_q * sigma_q);
  const double ap = 0.5 / (sigma_p * sigma_p);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < grid.n_q(); ++i) {
    const double dq = grid.q(i) - q0;
    for (int j = 0; j < grid.n_p(); ++j) {
      const double dp = grid.p(j) - p0;
      v[grid.index(i, j)] = std::exp(-aq * dq * dq - ap * dp * dp);
    }
  }
  return ClassicalDensity::normalized(grid, std::move(v));
}

double mean_observable(const Polynomial& f, const ClassicalDensity& rho) {
  const RealField fv = sample(rho.grid(), f);
  return quadrature(rho.grid(), RealField(fv * rho.values()));
}

namespace {

// Kernel K(x, x') = k(x) delta(x - x') restricted to the grid basis, with
// delta_{nn'} / cell_area standing in for delta(x - x').
struct DiagonalKernel {
  RealField diag;  // k(x_n) / cell_area
  double cell_area;

  DiagonalKernel compose(const DiagonalKernel& other) const {
    // (AB)(x, x'') = sum_x' A(x, x') B(x', x'') cell_area
    return {RealField(diag * other.diag * cell_area), cell_area};
  }
  double trace(const PhaseGrid& grid) const {
    // Tr K = sum_n K(x_n, x_n) cell_area
    double t = 0.0;
    for (int i = 0; i < grid.n_q(); ++i) {
      double row = 0.0;
      for (int j = 0; j < grid.n_p(); ++j) row += diag[grid.index(i, j)];
      t += row;
    }
    return t * cell_area;
  }
};

}  // namespace

double mean_observable_trace_form(const Polynomial& f, const ClassicalDensity& rho) {
  const PhaseGrid& g = rho.grid();
  const double a = g.cell_area();
  DiagonalKernel f_op{RealField(sample(g, f) / a), a};
  DiagonalKernel rho_op{RealField(rho.values() / a), a};
  const DiagonalKernel product = f_op.compose(rho_op);
  return product.trace(g) / rho_op.trace(g);
}

PhasePoint midpoint_step(const ClassicalHamiltonian& h, PhasePoint x, double dt) {
  auto velocity = [&](double q, double p) -> PhasePoint { return {h.d_dp(q, p), -h.d_dq(q, p)}; };
  PhasePoint v = velocity(x.q, x.p);
  PhasePoint y{x.q + dt * v.q, x.p + dt * v.p};
  if (h.is_affine()) return y;
  double last_change = INFINITY;
  for (int it = 0; it < 200; ++it) {
    v = velocity(0.5 * (x.q + y.q), 0.5 * (x.p + y.p));
    const PhasePoint next{x.q + dt * v.q, x.p + dt * v.p};
    const double change = std::abs(next.q - y.q) + std::abs(next.p - y.p);
    y = next;
    const double scale = 1.0 + std::abs(y.q) + std::abs(y.p);
    if (change <= 4e-16 * scale) return y;
    if (change >= last_change && change <= 1e-12 * scale) return y;
    last_change = change;
  }
  if (!std::isfinite(y.q) || !std::isfinite(y.p)) {
    throw NumericalBreakdown("implicit midpoint produced non-finite state");
  }
  throw NumericalBreakdown("implicit midpoint iteration did not converge; reduce dt");
}

Trajectory flow_trajectory(const ClassicalHamiltonian& h, double q0, double p0, double t_final,
                           double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
    throw std::invalid_argument("t_final must be non-negative");
  }
  Trajectory traj;
  const auto n_steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
  traj.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.points.reserve(static_cast<std::size_t>(n_steps) + 1);
  PhasePoint x{q0, p0};
  traj.times.push_back(0.0);
  traj.points.push_back(x);
  for (long k = 1; k <= n_steps; ++k) {
    const double t_prev = traj.times.back();
    const double t_next = (k == n_steps) ? t_final : static_cast<double>(k) * dt;
    const double h_step = t_next - t_prev;
    const double dq = h.d_dq(x.q, x.p), dp = h.d_dp(x.q, x.p);
    if (!std::isfinite(dq) || !std::isfinite(dp)) {
      throw NumericalBreakdown("non-finite Hamiltonian derivative at t=" + std::to_string(t_prev));
    }
    try {
      x = midpoint_step(h, x, h_step);
    } catch (const NumericalBreakdown& e) {
      throw NumericalBreakdown(std::string(e.what()) + " at t=" + std::to_string(t_prev));
    }
    traj.times.push_back(t_next);
    traj.points.push_back(x);
  }
  return traj;
}

}  // namespace hqc
