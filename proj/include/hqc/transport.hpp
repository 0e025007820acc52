#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hqc/phase_space.hpp"

namespace hqc {

struct TransportOptions {
  // Values below -eps_neg_rel * max are a scheme failure; values in
  // [-eps_neg_rel * max, 0) are clamped to zero.
  double eps_neg_rel = ClassicalDensity::kDefaultNegativityTolerance;
  // Largest relative mass correction accepted after a step before the run fails.
  double mass_correction_cap = 1e-8;
};

enum class TransportMethod {
  kIdentity,       // H has no gradient
  kSpectralShift,  // affine H: uniform departure offset, trigonometric interpolation
  kBicubic,        // general H: tensor cubic Lagrange at backward midpoint departures
};

const char* to_string(TransportMethod m);

/// How a field is treated by transport. Density fields (real, meant to be
/// non-negative) get a quasi-monotone lower bound in the bicubic path: each
/// interpolated value is kept at or above the smallest value of its 4x4
/// stencil, so Gaussian tails cannot undershoot into negative values.
enum class FieldKind { kGeneral, kDensity };

/// Courant numbers of the transport generated by H over one step.
struct CflReport {
  double q_courant = 0.0;  // max|dH/dp| * dt / dq
  double p_courant = 0.0;  // max|dH/dq| * dt / dp
  double max_speed_q = 0.0;
  double max_speed_p = 0.0;
  bool finite = true;

  bool ok() const { return finite && q_courant <= 1.0 && p_courant <= 1.0; }
  /// "q-transport" or "p-transport", whichever Courant number is larger.
  std::string binding() const;
};

CflReport transport_cfl(const PhaseGrid& grid, const ClassicalHamiltonian& h, double dt);

/// Semi-Lagrangian transport of a phase-space field over one time step of
/// the Liouville flow generated by H:  f_new(x) = f_old(X(-dt; x)).
///
/// The backward characteristic X is one implicit-midpoint step from each
/// node. Departure geometry depends only on (grid, H, dt), so it is
/// computed once and reused for every application.
class TransportPlan {
 public:
  TransportPlan(const PhaseGrid& grid, const ClassicalHamiltonian& h, double dt);

  TransportMethod method() const { return method_; }
  const PhaseGrid& grid() const { return grid_; }

  /// In-place transport of a complex field (real fields use zero imaginary part).
  void apply(ComplexField& field, FieldKind kind = FieldKind::kGeneral) const;

 private:
  void apply_spectral(ComplexField& field) const;
  void apply_bicubic(ComplexField& field, bool lower_bound) const;

  PhaseGrid grid_;
  TransportMethod method_ = TransportMethod::kIdentity;

  // Fourier multipliers for the uniform shift; empty when the axis does not move.
  std::vector<Complex> q_multiplier_;
  std::vector<Complex> p_multiplier_;

  // Per-node stencil origin (wrapped) and cubic weights.
  std::vector<std::int32_t> q_base_;
  std::vector<std::int32_t> p_base_;
  std::vector<std::array<double, 4>> q_weights_;
  std::vector<std::array<double, 4>> p_weights_;
};

/// Post-step treatment of a field that must be real and non-negative:
/// drops the imaginary part, fails on negativity beyond tolerance, clamps
/// the rest, then restores target_mass if the correction is within the cap.
void finalize_density_field(const PhaseGrid& grid, ComplexField& field, double target_mass,
                            const TransportOptions& opts, const std::string& what);

/// Liouville propagator for a fixed (grid, H, dt); steps reuse one plan.
class LiouvilleSolver {
 public:
  LiouvilleSolver(const PhaseGrid& grid, const ClassicalHamiltonian& h, double dt,
                  TransportOptions opts = {});

  ClassicalDensity step(const ClassicalDensity& rho) const;
  const TransportPlan& plan() const { return plan_; }
  double dt() const { return dt_; }

 private:
  double dt_;
  TransportOptions opts_;
  TransportPlan plan_;
};

/// One step of  d rho/dt = dH/dq d rho/dp - d rho/dq dH/dp.
ClassicalDensity liouville_step(const ClassicalDensity& rho, const ClassicalHamiltonian& h,
                                double dt, TransportOptions opts = {});

}  // namespace hqc
