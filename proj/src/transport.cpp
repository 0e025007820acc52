#include "hqc/transport.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

namespace hqc {

const char* to_string(TransportMethod m) {
  switch (m) {
    case TransportMethod::kIdentity:
      return "identity";
    case TransportMethod::kSpectralShift:
      return "spectral-shift";
    case TransportMethod::kBicubic:
      return "bicubic";
  }
  return "?";
}

std::string CflReport::binding() const {
  return q_courant >= p_courant ? "q-transport (max|dH/dp|*dt <= dq)"
                                : "p-transport (max|dH/dq|*dt <= dp)";
}

CflReport transport_cfl(const PhaseGrid& grid, const ClassicalHamiltonian& h, double dt) {
  CflReport r;
  for (int i = 0; i < grid.n_q(); ++i) {
    for (int j = 0; j < grid.n_p(); ++j) {
      const double vq = std::abs(h.d_dp(grid.q(i), grid.p(j)));
      const double vp = std::abs(h.d_dq(grid.q(i), grid.p(j)));
      if (!std::isfinite(vq) || !std::isfinite(vp)) r.finite = false;
      r.max_speed_q = std::max(r.max_speed_q, vq);
      r.max_speed_p = std::max(r.max_speed_p, vp);
    }
  }
  r.q_courant = r.max_speed_q * dt / grid.dq();
  r.p_courant = r.max_speed_p * dt / grid.dp();
  return r;
}

namespace {

// Multipliers e^{-2 pi i k s / n} for a shift of s cells; the Nyquist mode
// takes cos(pi s) so real input stays real.
std::vector<Complex> shift_multipliers(int n, double shift_cells) {
  std::vector<Complex> m(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int ks = (2 * k < n) ? k : k - n;
    if (2 * k == n) {
      m[k] = Complex(std::cos(std::numbers::pi * shift_cells), 0.0);
    } else {
      const double phase = -2.0 * std::numbers::pi * ks * shift_cells / n;
      m[k] = Complex(std::cos(phase), std::sin(phase));
    }
  }
  return m;
}

std::array<double, 4> cubic_weights(double a) {
  return {-a * (1.0 - a) * (2.0 - a) / 6.0, (1.0 + a) * (1.0 - a) * (2.0 - a) / 2.0,
          (1.0 + a) * a * (2.0 - a) / 2.0, -(1.0 + a) * a * (1.0 - a) / 6.0};
}

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace

TransportPlan::TransportPlan(const PhaseGrid& grid, const ClassicalHamiltonian& h, double dt)
    : grid_(grid) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (h.is_zero() || (h.is_affine() && h.as_polynomial().coefficient(0, 1) == 0.0 &&
                      h.as_polynomial().coefficient(1, 0) == 0.0)) {
    method_ = TransportMethod::kIdentity;
    return;
  }
  if (h.is_affine()) {
    method_ = TransportMethod::kSpectralShift;
    const double vq = h.as_polynomial().coefficient(0, 1);   // dq/dt = dH/dp
    const double vp = -h.as_polynomial().coefficient(1, 0);  // dp/dt = -dH/dq
    if (vq != 0.0) q_multiplier_ = shift_multipliers(grid.n_q(), vq * dt / grid.dq());
    if (vp != 0.0) p_multiplier_ = shift_multipliers(grid.n_p(), vp * dt / grid.dp());
    return;
  }

  method_ = TransportMethod::kBicubic;
  const std::size_t n = grid.size();
  q_base_.resize(n);
  p_base_.resize(n);
  q_weights_.resize(n);
  p_weights_.resize(n);
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < grid.n_q(); ++i) {
    for (int j = 0; j < grid.n_p(); ++j) {
      const std::size_t idx = grid.index(i, j);
      PhasePoint d{};
      try {
        d = midpoint_step(h, {grid.q(i), grid.p(j)}, -dt);
      } catch (const NumericalBreakdown&) {
#pragma omp atomic write
        failed = true;
        continue;
      }
      const double u = (d.q - grid.q_min()) / grid.dq() - 0.5;
      const double v = (d.p - grid.p_min()) / grid.dp() - 0.5;
      const double fu = std::floor(u), fv = std::floor(v);
      q_base_[idx] = wrap(static_cast<int>(fu) - 1, grid.n_q());
      p_base_[idx] = wrap(static_cast<int>(fv) - 1, grid.n_p());
      q_weights_[idx] = cubic_weights(u - fu);
      p_weights_[idx] = cubic_weights(v - fv);
    }
  }
  if (failed) throw NumericalBreakdown("backward characteristic did not converge; reduce dt");
}

void TransportPlan::apply(ComplexField& field, FieldKind kind) const {
  if (static_cast<std::size_t>(field.size()) != grid_.size()) {
    throw std::invalid_argument("field size does not match transport grid");
  }
  switch (method_) {
    case TransportMethod::kIdentity:
      return;
    case TransportMethod::kSpectralShift:
      apply_spectral(field);
      return;
    case TransportMethod::kBicubic:
      apply_bicubic(field, kind == FieldKind::kDensity);
      return;
  }
}

void TransportPlan::apply_spectral(ComplexField& field) const {
  const int n_q = grid_.n_q();
  const int n_p = grid_.n_p();
  if (!q_multiplier_.empty()) {
#pragma omp parallel
    {
      Eigen::FFT<double> fft;
      std::vector<Complex> line(static_cast<std::size_t>(n_q)), spec(static_cast<std::size_t>(n_q));
#pragma omp for schedule(static)
      for (int j = 0; j < n_p; ++j) {
        for (int i = 0; i < n_q; ++i) line[i] = field[grid_.index(i, j)];
        fft.fwd(spec, line);
        for (int k = 0; k < n_q; ++k) spec[k] *= q_multiplier_[k];
        fft.inv(line, spec);
        for (int i = 0; i < n_q; ++i) field[grid_.index(i, j)] = line[i];
      }
    }
  }
  if (!p_multiplier_.empty()) {
#pragma omp parallel
    {
      Eigen::FFT<double> fft;
      std::vector<Complex> line(static_cast<std::size_t>(n_p)), spec(static_cast<std::size_t>(n_p));
#pragma omp for schedule(static)
      for (int i = 0; i < n_q; ++i) {
        const std::size_t base = grid_.index(i, 0);
        for (int j = 0; j < n_p; ++j) line[j] = field[base + j];
        fft.fwd(spec, line);
        for (int k = 0; k < n_p; ++k) spec[k] *= p_multiplier_[k];
        fft.inv(line, spec);
        for (int j = 0; j < n_p; ++j) field[base + j] = line[j];
      }
    }
  }
}

void TransportPlan::apply_bicubic(ComplexField& field, bool lower_bound) const {
  const ComplexField src = field;
  const int n_q = grid_.n_q();
  const int n_p = grid_.n_p();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_q; ++i) {
    for (int j = 0; j < n_p; ++j) {
      const std::size_t idx = grid_.index(i, j);
      const auto& wq = q_weights_[idx];
      const auto& wp = p_weights_[idx];
      Complex acc(0.0, 0.0);
      double lowest = INFINITY;
      int iq = q_base_[idx];
      for (int a = 0; a < 4; ++a) {
        const std::size_t row = grid_.index(iq, 0);
        int jp = p_base_[idx];
        Complex line(0.0, 0.0);
        for (int b = 0; b < 4; ++b) {
          const Complex v = src[row + jp];
          line += wp[b] * v;
          lowest = std::min(lowest, v.real());
          if (++jp == n_p) jp = 0;
        }
        acc += wq[a] * line;
        if (++iq == n_q) iq = 0;
      }
      if (lower_bound && acc.real() < lowest) acc.real(lowest);
      field[idx] = acc;
    }
  }
}

void finalize_density_field(const PhaseGrid& grid, ComplexField& field, double target_mass,
                            const TransportOptions& opts, const std::string& what) {
  RealField re = field.real();
  const double peak = re.maxCoeff();
  const double floor = -opts.eps_neg_rel * std::max(peak, 0.0);
  const double lowest = re.minCoeff();
  if (!std::isfinite(peak) || !std::isfinite(lowest)) {
    throw NumericalBreakdown(what + ": non-finite values after transport");
  }
  if (lowest < floor) {
    std::ostringstream os;
    os << what << ": negativity " << lowest << " below tolerance " << floor;
    throw NumericalBreakdown(os.str());
  }
  re = re.max(0.0);
  if (target_mass > 0.0) {
    const double m = quadrature(grid, re);
    const double correction = target_mass / m - 1.0;
    if (!(std::abs(correction) <= opts.mass_correction_cap)) {
      std::ostringstream os;
      os << what << ": mass drift " << correction << " exceeds cap " << opts.mass_correction_cap;
      throw NumericalBreakdown(os.str());
    }
    re *= target_mass / m;
  }
  field = re.cast<Complex>();
}

namespace {

double checked_liouville_dt(const PhaseGrid& grid, const ClassicalHamiltonian& h, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  const CflReport cfl = transport_cfl(grid, h, dt);
  if (!cfl.finite) throw std::invalid_argument("velocity field is not finite on the grid");
  if (!cfl.ok()) {
    std::ostringstream os;
    os << "dt=" << dt << " violates the transport bound: " << cfl.binding()
       << " (Courant q=" << cfl.q_courant << ", p=" << cfl.p_courant << ")";
    throw std::invalid_argument(os.str());
  }
  return dt;
}

}  // namespace

LiouvilleSolver::LiouvilleSolver(const PhaseGrid& grid, const ClassicalHamiltonian& h, double dt,
                                 TransportOptions opts)
    : dt_(checked_liouville_dt(grid, h, dt)), opts_(opts), plan_(grid, h, dt_) {}

ClassicalDensity LiouvilleSolver::step(const ClassicalDensity& rho) const {
  if (!(rho.grid() == plan_.grid())) throw std::invalid_argument("density grid mismatch");
  ComplexField f = rho.values().cast<Complex>();
  const double mass = quadrature(rho.grid(), rho.values());
  plan_.apply(f, FieldKind::kDensity);
  finalize_density_field(rho.grid(), f, mass, opts_, "liouville_step");
  return ClassicalDensity::from_values(rho.grid(), f.real(), opts_.eps_neg_rel);
}

ClassicalDensity liouville_step(const ClassicalDensity& rho, const ClassicalHamiltonian& h,
                                double dt, TransportOptions opts) {
  return LiouvilleSolver(rho.grid(), h, dt, opts).step(rho);
}

}  // namespace hqc
