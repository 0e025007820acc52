#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hqc/hybrid.hpp"

namespace hqc {

/// Full description of a measurement run: a superposition in the
/// eigenbasis of the measured observable, coupled through V_cm to an
/// apparatus prepared as a regularised point (q0, p0).
struct MeasurementScenario {
  Amplitudes amplitudes;
  MeasuredObservable observable{std::vector<double>{0.0}};
  CouplingPotential coupling = pointer_coupling_p();
  double q0 = 0.0;
  double p0 = 0.0;
  double sigma_q = 0.5;
  double sigma_p = 0.5;
  PhaseGrid grid;
  double dt = 0.01;
  double t_final = 0.0;
  int cadence = 1;
  double hbar = 1.0;
  double tol_psd_rel = 1e-6;  // relative to the largest diagonal-block value
  TransportOptions transport;
  double boundary_sigmas = 3.0;
  double boundary_fraction = 1e-4;
  bool enforce_positivity = false;

  int dim() const { return static_cast<int>(amplitudes.size()); }
  /// Every violated precondition, empty when the scenario is runnable.
  std::vector<std::string> problems() const;
  /// Throws std::invalid_argument carrying all problems.
  void validate() const;
  BoundaryGuard boundary() const;
  EvolveOptions evolve_options() const;
};

using PointTable = std::vector<std::vector<PhasePoint>>;

/// Product of the superposition density and the regularised apparatus point.
HybridState build_initial(const MeasurementScenario& s);

/// f_ij = c_i conj(c_j) G(q_ij, p_ij) with unit-mass Gaussians G. The point
/// table must satisfy points[i][j] == points[j][i].
HybridState ansatz_correlated(const Amplitudes& c, const PointTable& points, double sigma_q,
                              double sigma_p, const PhaseGrid& grid, double hbar = 1.0);

/// Diagonal blocks |c_i|^2 G(q_i(t), p_i(t)); off-diagonal blocks zero.
HybridState collapsed_state(const Amplitudes& c, std::span<const Trajectory> trajectories, double t,
                            double sigma_q, double sigma_p, const PhaseGrid& grid,
                            double hbar = 1.0);

/// Apparatus trajectories q_i(t), p_i(t) under H_i = v_i V_cm from (q0, p0).
std::vector<Trajectory> pointer_trajectories(const MeasurementScenario& s);

/// Points of the correlated ansatz at time t: (i, j) follows the
/// characteristic of H_ij = (v_i + v_j)/2 V_cm from (q0, p0).
PointTable catalog_points(const MeasurementScenario& s, double t);

struct MarginSample {
  double time = 0.0;
  std::vector<double> margin;  // per pair i < j, row-major
};

struct ViolationReport {
  double tolerance_rel = 0.0;
  std::optional<double> onset_time;
  PhasePoint onset_location;
  double onset_value = 0.0;
  double worst_value = 0.0;  // most negative pointwise eigenvalue seen (scaled by cell area)
  double worst_time = 0.0;
  PhasePoint worst_location;
  std::vector<MarginSample> margins;

  bool violated() const { return onset_time.has_value(); }
};

/// Scans the pointwise-minimum history for the first tick below
/// -tol_psd_rel * max_diag and collects the per-pair 2x2 margins.
ViolationReport detect_violation(std::span<const Diagnostics> ticks, double tol_psd_rel = 1e-6);

/// Annihilates every off-diagonal block and rescales to unit trace.
HybridState collapse_project(const HybridState& state);

struct CurvePoint {
  double time = 0.0;
  double value = 0.0;
};

/// |rho_ij(t)| / |rho_ij(0)| of the quantum marginal.
std::vector<CurvePoint> decoherence_curve(std::span<const Diagnostics> ticks, int i, int j);

/// |rho_ij(t)|/|rho_ij(0)| for linear pointer coupling V = p and a Gaussian
/// momentum spread: exp(-(dv sigma_p t)^2 / (2 hbar^2)).
double gaussian_decoherence(double gap, double sigma_p, double t, double hbar = 1.0);
/// Time at which gaussian_decoherence reaches 1/2: hbar sqrt(2 ln 2) / (dv sigma_p).
double gaussian_half_time(double gap, double sigma_p, double hbar = 1.0);

struct StudyOptions {
  int max_cells = 4096;  // per axis
};

struct StudyRow {
  double sigma = 0.0;
  std::optional<double> onset_time;
  std::optional<double> half_time;
  int n_q = 0;
  int n_p = 0;
  double dt = 0.0;
};

struct DeltaLimitTable {
  std::vector<StudyRow> rows;
  double fit_exponent = 0.0;  // slope of ln(onset) against ln(sigma); NaN with < 2 onsets
  std::vector<std::string> warnings;
  std::pair<int, int> pair{0, 1};
};

/// Scenario for one sigma of the study: both widths set to sigma, grid cell
/// counts scaled by base_sigma/sigma (capped), dt scaled with the cell size.
/// Returns nullopt (and appends a warning) when sigma cannot be resolved.
std::optional<MeasurementScenario> study_scenario(const MeasurementScenario& base, double sigma,
                                                  const StudyOptions& opts,
                                                  std::vector<std::string>& warnings);

/// Pair (i < j) with non-zero amplitudes and the largest eigenvalue gap.
std::pair<int, int> decohering_pair(const MeasurementScenario& s);

/// Runs one job per sigma (sigmas strictly decreasing). Jobs are independent
/// and merged in input order.
DeltaLimitTable delta_limit_study(const MeasurementScenario& base, std::span<const double> sigmas,
                                  const StudyOptions& opts = {});

}  // namespace hqc
