#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hqc/phase_space.hpp"
#include "hqc/quantum.hpp"
#include "hqc/transport.hpp"

namespace hqc {

/// Classical factor V_cm of the product Hamiltonian V_qm (x) V_cm.
using CouplingPotential = ClassicalHamiltonian;

inline CouplingPotential pointer_coupling_p(double scale = 1.0) {
  return ClassicalHamiltonian::linear_p(scale);
}
inline CouplingPotential pointer_coupling_q(double scale = 1.0) {
  return ClassicalHamiltonian::polynomial(Polynomial::monomial(1, 0, scale));
}

/// sum_ij |psi_i><psi_j| (x) f_ij(q, p) in the eigenbasis of the measured
/// observable.
///
/// Only the blocks with i <= j are stored; f_ji is read as conj(f_ij), so
/// Hermiticity holds by construction. Diagonal blocks are kept with an
/// exactly zero imaginary part.
class HybridState {
 public:
  HybridState(const PhaseGrid& grid, int dim, double hbar = 1.0);

  int dim() const { return dim_; }
  const PhaseGrid& grid() const { return grid_; }
  double hbar() const { return hbar_; }

  const ComplexField& upper(int i, int j) const { return blocks_[slot(i, j)]; }
  ComplexField& upper(int i, int j) { return blocks_[slot(i, j)]; }
  /// Full block for any (i, j), conjugating the stored one when i > j.
  ComplexField block(int i, int j) const;
  Complex value(int i, int j, std::size_t node) const {
    return i <= j ? blocks_[slot(i, j)][static_cast<Eigen::Index>(node)]
                  : std::conj(blocks_[slot(j, i)][static_cast<Eigen::Index>(node)]);
  }
  void set_block(int i, int j, ComplexField values);

  double block_mass(int i) const;
  /// sum_i quadrature(Re f_ii)
  double trace() const;

 private:
  std::size_t slot(int i, int j) const;

  PhaseGrid grid_;
  int dim_;
  double hbar_;
  std::vector<ComplexField> blocks_;
};

/// f_ij = (rho_qm)_ij * rho_cm(q, p).
HybridState product_state(const QuantumDensity& rho_qm, const ClassicalDensity& rho_cm,
                          double hbar = 1.0);

struct StepOptions {
  TransportOptions transport;
  double trace_drift_tol = 1e-8;  // per step
};

/// Stability bounds for the hybrid step.
struct StepBounds {
  CflReport transport;        // stiffest block Hamiltonian max|v_i+v_j|/2 * V_cm
  double phase_number = 0.0;  // dt * max|v_i - v_j| * max|V_cm| / hbar, must be <= 0.5
  bool ok() const { return transport.ok() && phase_number <= 0.5; }
  std::string binding() const;
};

StepBounds step_bounds(const PhaseGrid& grid, const MeasuredObservable& obs,
                       const CouplingPotential& coupling, double dt, double hbar);

/// Integrator for the per-block equation
///   df_ij/dt = (v_i - v_j)/(i hbar) V_cm f_ij + (v_i + v_j)/2 {V_cm, f_ij}
/// by Strang splitting: half-step pointwise phase, full transport under
/// H_ij = (v_i + v_j)/2 V_cm, half-step phase. Plans and phase factors are
/// built once; blocks sharing a mean eigenvalue share a plan.
class AleksandrovPropagator {
 public:
  AleksandrovPropagator(const PhaseGrid& grid, const MeasuredObservable& obs,
                        const CouplingPotential& coupling, double dt, double hbar,
                        StepOptions opts = {});

  void step_in_place(HybridState& state) const;
  HybridState step(const HybridState& state) const;

  double dt() const { return dt_; }
  const StepBounds& bounds() const { return bounds_; }
  const TransportPlan& plan_for(int i, int j) const;

 private:
  struct BlockRule {
    int i, j;
    int plan;   // index into plans_
    int phase;  // index into half_phases_, -1 when v_i == v_j
  };

  PhaseGrid grid_;
  int dim_;
  double dt_;
  double hbar_;
  StepOptions opts_;
  StepBounds bounds_;
  std::vector<TransportPlan> plans_;
  std::vector<ComplexField> half_phases_;
  std::vector<BlockRule> rules_;
};

HybridState aleksandrov_step(const HybridState& state, const MeasuredObservable& obs,
                             const CouplingPotential& coupling, double dt, StepOptions opts = {});

/// entry(i, j) = quadrature(f_ij). Trace is checked to 1e-8; positivity is not.
QuantumDensity quantum_marginal(const HybridState& state);

/// sum_i Re f_ii, validated as a density (non-negative within eps, unit mass).
ClassicalDensity classical_marginal(const HybridState& state,
                                    double eps_neg_rel = ClassicalDensity::kDefaultNegativityTolerance);

/// Pointwise positivity certificate.
///
/// The classical kernels are diagonal in the |q>|p> basis, so the full
/// operator is block diagonal over grid nodes with d x d blocks
/// M(q, p) = [f_ij(q, p)]. Its spectrum is the union of the node spectra and
/// it is PSD iff every M(q, p) is.
struct PointwiseMinimum {
  double value = 0.0;   // min eigenvalue over the grid, density units
  double scaled = 0.0;  // value * cell_area
  std::size_t node = 0;
  PhasePoint location;
  RealField field;      // per-node minimum eigenvalue, density units
};

PointwiseMinimum pointwise_min_eigenvalue(const HybridState& state);

/// sum_ij quadrature(|f_ij|^2) * cell_area / trace^2.
double hybrid_purity_functional(const HybridState& state);
/// Purity functional of state relative to that of reference (normally the
/// t = 0 state of the same run).
double hybrid_purity(const HybridState& state, const HybridState& reference);

struct Diagnostics {
  double time = 0.0;
  double trace = 0.0;
  double purity_ratio = 0.0;
  double min_eig = 0.0;  // pointwise minimum scaled by cell_area
  PhasePoint min_location;
  double max_diag = 0.0;  // largest diagonal-block value scaled by cell_area
  ComplexMatrix quantum_marginal;
  double qm_entropy = 0.0;
  double qm_purity = 0.0;
  double qm_min_eig = 0.0;
  std::vector<double> offdiag_mass;  // |quadrature(f_ij)| for i < j, row-major order
  std::vector<double> margin;        // max_grid(|f_ij| - sqrt(f_ii f_jj)) * cell_area, i < j
  std::vector<double> block_mass;    // quadrature(f_ii)
  std::vector<double> mean_q;        // per diagonal block, 0 when the block is empty
  std::vector<double> mean_p;
  bool projected = false;            // off-diagonals were annihilated at this step
};

Diagnostics diagnose(const HybridState& state, double time, double reference_purity);

/// Column label for pair (i, j), zero-based input, e.g. "12" or "3_10".
std::string pair_label(int i, int j, int dim);
std::string diagnostics_csv_header(int dim);
std::string diagnostics_csv_row(const Diagnostics& d);

/// Boundary-contamination rule: at most max_fraction of the classical mass
/// may sit within band_sigmas * sigma of the periodic boundary.
struct BoundaryGuard {
  double sigma_q = 0.0;
  double sigma_p = 0.0;
  double band_sigmas = 3.0;
  double max_fraction = 1e-4;
};

double boundary_band_fraction(const HybridState& state, const BoundaryGuard& guard);

struct EvolveOptions {
  int cadence = 1;
  StepOptions step;
  std::optional<BoundaryGuard> boundary;
  // When set, called after any step whose pointwise minimum eigenvalue is
  // below -tol_psd_rel * max_diag; the returned state replaces the current one.
  std::function<HybridState(const HybridState&)> on_violation;
  double tol_psd_rel = 1e-6;
};

struct Run {
  std::vector<Diagnostics> ticks;
  HybridState final_state;
  std::optional<double> first_projection;
};

using TickObserver = std::function<void(const HybridState&, const Diagnostics&)>;

/// Fixed-step loop; t_final must be a whole number of steps. Diagnostics
/// are emitted at step 0, every `cadence` steps, and at the final step.
Run evolve(const HybridState& initial, const MeasuredObservable& obs,
           const CouplingPotential& coupling, double dt, double t_final,
           const EvolveOptions& opts = {}, const TickObserver& observer = {});

/// Number of steps for (dt, t_final), or throws when t_final is not a
/// multiple of dt (relative 1e-9).
long step_count(double dt, double t_final);

}  // namespace hqc
