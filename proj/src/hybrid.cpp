#include "hqc/hybrid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace hqc {

// --- HybridState ---------------------------------------------------------

HybridState::HybridState(const PhaseGrid& grid, int dim, double hbar)
    : grid_(grid), dim_(dim), hbar_(hbar) {
  if (dim < 1 || dim > kMaxQuantumDim) throw std::invalid_argument("hybrid dimension must be 1..16");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw std::invalid_argument("hbar must be positive");
  blocks_.assign(static_cast<std::size_t>(dim * (dim + 1) / 2),
                 ComplexField::Zero(static_cast<Eigen::Index>(grid.size())));
}

std::size_t HybridState::slot(int i, int j) const {
  if (i < 0 || j < 0 || i >= dim_ || j >= dim_ || i > j) {
    throw std::out_of_range("stored blocks are addressed with 0 <= i <= j < dim");
  }
  // row-major upper triangle
  return static_cast<std::size_t>(i * dim_ - i * (i - 1) / 2 + (j - i));
}

ComplexField HybridState::block(int i, int j) const {
  return i <= j ? upper(i, j) : ComplexField(upper(j, i).conjugate());
}

void HybridState::set_block(int i, int j, ComplexField values) {
  if (static_cast<std::size_t>(values.size()) != grid_.size()) {
    throw std::invalid_argument("block size does not match grid");
  }
  if (i > j) {
    set_block(j, i, values.conjugate());
    return;
  }
  if (i == j) values = values.real().cast<Complex>();
  blocks_[slot(i, j)] = std::move(values);
}

double HybridState::block_mass(int i) const {
  return quadrature(grid_, RealField(upper(i, i).real()));
}

double HybridState::trace() const {
  double t = 0.0;
  for (int i = 0; i < dim_; ++i) t += block_mass(i);
  return t;
}

HybridState product_state(const QuantumDensity& rho_qm, const ClassicalDensity& rho_cm,
                          double hbar) {
  HybridState s(rho_cm.grid(), rho_qm.dim(), hbar);
  for (int i = 0; i < rho_qm.dim(); ++i) {
    for (int j = i; j < rho_qm.dim(); ++j) {
      s.set_block(i, j, rho_qm(i, j) * rho_cm.values().cast<Complex>());
    }
  }
  return s;
}

// --- Step ----------------------------------------------------------------

std::string StepBounds::binding() const {
  const double courant = std::max(transport.q_courant, transport.p_courant);
  std::ostringstream os;
  if (courant >= phase_number / 0.5) {
    os << "transport CFL of the stiffest block Hamiltonian: " << transport.binding()
       << " (Courant " << courant << ", limit 1)";
  } else {
    os << "phase resolution: dt*max|v_i-v_j|*max|V_cm|/hbar = " << phase_number
       << " (limit 0.5)";
  }
  return os.str();
}

StepBounds step_bounds(const PhaseGrid& grid, const MeasuredObservable& obs,
                       const CouplingPotential& coupling, double dt, double hbar) {
  double max_mean = 0.0;
  for (int i = 0; i < obs.dim(); ++i)
    for (int j = i; j < obs.dim(); ++j)
      max_mean = std::max(max_mean, std::abs(0.5 * (obs.eigenvalue(i) + obs.eigenvalue(j))));
  StepBounds b;
  b.transport = transport_cfl(grid, coupling.scaled(max_mean), dt);
  double max_v = 0.0;
  for (int i = 0; i < grid.n_q(); ++i)
    for (int j = 0; j < grid.n_p(); ++j)
      max_v = std::max(max_v, std::abs(coupling(grid.q(i), grid.p(j))));
  b.phase_number = dt * obs.max_gap() * max_v / hbar;
  return b;
}

AleksandrovPropagator::AleksandrovPropagator(const PhaseGrid& grid, const MeasuredObservable& obs,
                                             const CouplingPotential& coupling, double dt,
                                             double hbar, StepOptions opts)
    : grid_(grid), dim_(obs.dim()), dt_(dt), hbar_(hbar), opts_(opts) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  bounds_ = step_bounds(grid, obs, coupling, dt, hbar);
  if (!bounds_.transport.finite) throw std::invalid_argument("coupling velocity is not finite");
  if (!bounds_.ok()) {
    std::ostringstream os;
    os << "dt=" << dt << " violates " << bounds_.binding();
    throw std::invalid_argument(os.str());
  }

  std::vector<double> means, gaps;
  const RealField v_cm = sample(grid, coupling.as_polynomial());
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j) {
      const double mean = 0.5 * (obs.eigenvalue(i) + obs.eigenvalue(j));
      const double gap = obs.eigenvalue(i) - obs.eigenvalue(j);
      BlockRule r{i, j, -1, -1};
      auto m = std::find(means.begin(), means.end(), mean);
      if (m == means.end()) {
        means.push_back(mean);
        plans_.emplace_back(grid, coupling.scaled(mean), dt);
        r.plan = static_cast<int>(plans_.size()) - 1;
      } else {
        r.plan = static_cast<int>(m - means.begin());
      }
      if (gap != 0.0) {
        auto g = std::find(gaps.begin(), gaps.end(), gap);
        if (g == gaps.end()) {
          gaps.push_back(gap);
          // exp(-i gap V dt / (2 hbar))
          const RealField angle = -gap * dt / (2.0 * hbar) * v_cm;
          ComplexField phase(angle.size());
          for (Eigen::Index n = 0; n < angle.size(); ++n) {
            phase[n] = Complex(std::cos(angle[n]), std::sin(angle[n]));
          }
          half_phases_.push_back(std::move(phase));
          r.phase = static_cast<int>(half_phases_.size()) - 1;
        } else {
          r.phase = static_cast<int>(g - gaps.begin());
        }
      }
      rules_.push_back(r);
    }
  }
}

const TransportPlan& AleksandrovPropagator::plan_for(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (const auto& r : rules_)
    if (r.i == i && r.j == j) return plans_[static_cast<std::size_t>(r.plan)];
  throw std::out_of_range("no such block");
}

void AleksandrovPropagator::step_in_place(HybridState& state) const {
  if (!(state.grid() == grid_) || state.dim() != dim_) {
    throw std::invalid_argument("state does not match propagator grid/dimension");
  }
  if (state.hbar() != hbar_) throw std::invalid_argument("state hbar differs from propagator hbar");
  const double trace_before = state.trace();
  for (const auto& r : rules_) {
    ComplexField& f = state.upper(r.i, r.j);
    const TransportPlan& plan = plans_[static_cast<std::size_t>(r.plan)];
    if (r.i == r.j) {
      const double mass = quadrature(grid_, RealField(f.real()));
      plan.apply(f, FieldKind::kDensity);
      finalize_density_field(grid_, f, mass, opts_.transport,
                             "diagonal block " + std::to_string(r.i + 1));
      continue;
    }
    const ComplexField* half = r.phase >= 0 ? &half_phases_[static_cast<std::size_t>(r.phase)] : nullptr;
    if (half) f *= *half;
    plan.apply(f);
    if (half) f *= *half;
  }
  const double trace_after = state.trace();
  if (!(std::abs(trace_after - trace_before) <= opts_.trace_drift_tol)) {
    std::ostringstream os;
    os << "trace drift " << trace_after - trace_before << " in one step exceeds "
       << opts_.trace_drift_tol;
    throw NumericalBreakdown(os.str());
  }
}

HybridState AleksandrovPropagator::step(const HybridState& state) const {
  HybridState next = state;
  step_in_place(next);
  return next;
}

HybridState aleksandrov_step(const HybridState& state, const MeasuredObservable& obs,
                             const CouplingPotential& coupling, double dt, StepOptions opts) {
  if (obs.dim() != state.dim()) throw std::invalid_argument("observable dimension mismatch");
  return AleksandrovPropagator(state.grid(), obs, coupling, dt, state.hbar(), opts).step(state);
}

// --- Marginals and certificates -------------------------------------------

QuantumDensity quantum_marginal(const HybridState& state) {
  const int d = state.dim();
  ComplexMatrix m(d, d);
  for (int i = 0; i < d; ++i) {
    m(i, i) = Complex(state.block_mass(i), 0.0);
    for (int j = i + 1; j < d; ++j) {
      m(i, j) = quadrature(state.grid(), state.upper(i, j));
      m(j, i) = std::conj(m(i, j));
    }
  }
  return QuantumDensity::from_matrix(m, 1e-12, 1e-8);
}

ClassicalDensity classical_marginal(const HybridState& state, double eps_neg_rel) {
  RealField sum = RealField::Zero(static_cast<Eigen::Index>(state.grid().size()));
  for (int i = 0; i < state.dim(); ++i) sum += state.upper(i, i).real();
  return ClassicalDensity::from_values(state.grid(), std::move(sum), eps_neg_rel);
}

namespace {

double node_min_eigenvalue(const HybridState& s, std::size_t n, ComplexMatrix& scratch) {
  const int d = s.dim();
  const auto idx = static_cast<Eigen::Index>(n);
  if (d == 1) return s.upper(0, 0)[idx].real();
  if (d == 2) {
    return min_eigenvalue_2x2(s.upper(0, 0)[idx].real(), s.upper(1, 1)[idx].real(),
                              s.upper(0, 1)[idx]);
  }
  for (int i = 0; i < d; ++i) {
    scratch(i, i) = Complex(s.upper(i, i)[idx].real(), 0.0);
    for (int j = i + 1; j < d; ++j) {
      scratch(i, j) = s.upper(i, j)[idx];
      scratch(j, i) = std::conj(scratch(i, j));
    }
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(scratch, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

PointwiseMinimum pointwise_min_eigenvalue(const HybridState& state) {
  const PhaseGrid& g = state.grid();
  PointwiseMinimum out;
  out.field.resize(static_cast<Eigen::Index>(g.size()));
#pragma omp parallel
  {
    ComplexMatrix scratch(state.dim(), state.dim());
#pragma omp for schedule(static)
    for (int i = 0; i < g.n_q(); ++i) {
      for (int j = 0; j < g.n_p(); ++j) {
        const std::size_t n = g.index(i, j);
        out.field[static_cast<Eigen::Index>(n)] = node_min_eigenvalue(state, n, scratch);
      }
    }
  }
  Eigen::Index arg = 0;
  out.value = out.field.minCoeff(&arg);
  out.node = static_cast<std::size_t>(arg);
  out.location = g.node(out.node);
  out.scaled = out.value * g.cell_area();
  return out;
}

double hybrid_purity_functional(const HybridState& state) {
  const PhaseGrid& g = state.grid();
  double sum = 0.0;
  for (int i = 0; i < state.dim(); ++i) {
    for (int j = i; j < state.dim(); ++j) {
      const double q = quadrature(g, RealField(state.upper(i, j).abs2()));
      sum += (i == j) ? q : 2.0 * q;
    }
  }
  const double tr = state.trace();
  return sum * g.cell_area() / (tr * tr);
}

double hybrid_purity(const HybridState& state, const HybridState& reference) {
  return hybrid_purity_functional(state) / hybrid_purity_functional(reference);
}

// --- Diagnostics ------------------------------------------------------------

Diagnostics diagnose(const HybridState& state, double time, double reference_purity) {
  const PhaseGrid& g = state.grid();
  const int d = state.dim();
  Diagnostics out;
  out.time = time;
  out.trace = state.trace();
  out.purity_ratio = hybrid_purity_functional(state) / reference_purity;

  const PointwiseMinimum pm = pointwise_min_eigenvalue(state);
  out.min_eig = pm.scaled;
  out.min_location = pm.location;

  double max_diag = 0.0;
  for (int i = 0; i < d; ++i) max_diag = std::max(max_diag, state.upper(i, i).real().maxCoeff());
  out.max_diag = max_diag * g.cell_area();

  const QuantumDensity marginal = quantum_marginal(state);
  out.quantum_marginal = marginal.matrix();
  out.qm_purity = purity(marginal);
  out.qm_min_eig = min_eigenvalue(marginal.matrix());
  // The marginal of an evolved state can sit a rounding error outside the
  // PSD cone; the entropy is then undefined and reported as NaN.
  try {
    out.qm_entropy = von_neumann_entropy(marginal);
  } catch (const std::domain_error&) {
    out.qm_entropy = std::numeric_limits<double>::quiet_NaN();
  }

  const RealField qv = sample(g, Polynomial::monomial(1, 0));
  const RealField pv = sample(g, Polynomial::monomial(0, 1));
  for (int i = 0; i < d; ++i) {
    const RealField f = state.upper(i, i).real();
    const double mass = quadrature(g, f);
    out.block_mass.push_back(mass);
    if (mass > 0.0) {
      out.mean_q.push_back(quadrature(g, RealField(qv * f)) / mass);
      out.mean_p.push_back(quadrature(g, RealField(pv * f)) / mass);
    } else {
      out.mean_q.push_back(0.0);
      out.mean_p.push_back(0.0);
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      out.offdiag_mass.push_back(std::abs(marginal(i, j)));
      const RealField a = state.upper(i, i).real().max(0.0);
      const RealField b = state.upper(j, j).real().max(0.0);
      const RealField m = state.upper(i, j).abs() - (a * b).sqrt();
      out.margin.push_back(m.maxCoeff() * g.cell_area());
    }
  }
  return out;
}

std::string pair_label(int i, int j, int dim) {
  if (dim < 10) return std::to_string(i + 1) + std::to_string(j + 1);
  return std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

std::string diagnostics_csv_header(int dim) {
  std::string h = "t,trace,purity_ratio,min_eig,qm_entropy,qm_purity";
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) h += ",offdiag_mass_" + pair_label(i, j, dim);
  for (int i = 0; i < dim; ++i) {
    h += ",mean_q_" + std::to_string(i + 1) + ",mean_p_" + std::to_string(i + 1);
  }
  return h;
}

namespace {

void append_number(std::string& s, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  s.append(buf, res.ptr);
}

}  // namespace

std::string diagnostics_csv_row(const Diagnostics& d) {
  std::string row;
  append_number(row, d.time);
  for (double v : {d.trace, d.purity_ratio, d.min_eig, d.qm_entropy, d.qm_purity}) {
    row += ',';
    append_number(row, v);
  }
  for (double v : d.offdiag_mass) {
    row += ',';
    append_number(row, v);
  }
  for (std::size_t i = 0; i < d.mean_q.size(); ++i) {
    row += ',';
    append_number(row, d.mean_q[i]);
    row += ',';
    append_number(row, d.mean_p[i]);
  }
  return row;
}

double boundary_band_fraction(const HybridState& state, const BoundaryGuard& guard) {
  const PhaseGrid& g = state.grid();
  const double wq = guard.band_sigmas * guard.sigma_q;
  const double wp = guard.band_sigmas * guard.sigma_p;
  RealField total = RealField::Zero(static_cast<Eigen::Index>(g.size()));
  for (int i = 0; i < state.dim(); ++i) total += state.upper(i, i).real();
  RealField band = RealField::Zero(total.size());
  for (int i = 0; i < g.n_q(); ++i) {
    const bool q_edge = g.q(i) < g.q_min() + wq || g.q(i) > g.q_max() - wq;
    for (int j = 0; j < g.n_p(); ++j) {
      const bool p_edge = g.p(j) < g.p_min() + wp || g.p(j) > g.p_max() - wp;
      if (q_edge || p_edge) band[static_cast<Eigen::Index>(g.index(i, j))] = total[static_cast<Eigen::Index>(g.index(i, j))];
    }
  }
  const double m = quadrature(g, total);
  return m > 0.0 ? quadrature(g, band) / m : 0.0;
}

// --- Evolution --------------------------------------------------------------

long step_count(double dt, double t_final) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
    throw std::invalid_argument("t_final must be non-negative");
  }
  const double ratio = t_final / dt;
  const long n = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "t_final=" << t_final << " is not a whole number of steps of dt=" << dt;
    throw std::invalid_argument(os.str());
  }
  return n;
}

namespace {

void check_boundary(const HybridState& s, const std::optional<BoundaryGuard>& guard, double t) {
  if (!guard) return;
  const double frac = boundary_band_fraction(s, *guard);
  if (frac > guard->max_fraction) {
    std::ostringstream os;
    os << "boundary contamination at t=" << t << ": mass fraction " << frac << " within "
       << guard->band_sigmas << " sigma of the boundary exceeds " << guard->max_fraction;
    throw NumericalBreakdown(os.str());
  }
}

}  // namespace

Run evolve(const HybridState& initial, const MeasuredObservable& obs,
           const CouplingPotential& coupling, double dt, double t_final,
           const EvolveOptions& opts, const TickObserver& observer) {
  if (opts.cadence < 1) throw std::invalid_argument("cadence must be >= 1");
  if (obs.dim() != initial.dim()) throw std::invalid_argument("observable dimension mismatch");
  const long n_steps = step_count(dt, t_final);
  const AleksandrovPropagator prop(initial.grid(), obs, coupling, dt, initial.hbar(), opts.step);

  const double reference_purity = hybrid_purity_functional(initial);
  HybridState state = initial;
  std::vector<Diagnostics> ticks;
  std::optional<double> first_projection;

  check_boundary(state, opts.boundary, 0.0);
  const double trace0 = state.trace();
  {
    Diagnostics d0 = diagnose(state, 0.0, reference_purity);
    if (observer) observer(state, d0);
    ticks.push_back(std::move(d0));
  }

  for (long k = 1; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    prop.step_in_place(state);
    if (!(std::abs(state.trace() - trace0) <= opts.step.trace_drift_tol * (1.0 + t))) {
      std::ostringstream os;
      os << "accumulated trace drift " << state.trace() - trace0 << " at t=" << t;
      throw NumericalBreakdown(os.str());
    }
    check_boundary(state, opts.boundary, t);

    bool projected = false;
    if (opts.on_violation) {
      double max_diag = 0.0;
      for (int i = 0; i < state.dim(); ++i)
        max_diag = std::max(max_diag, state.upper(i, i).real().maxCoeff());
      const PointwiseMinimum pm = pointwise_min_eigenvalue(state);
      if (pm.value < -opts.tol_psd_rel * max_diag) {
        state = opts.on_violation(state);
        projected = true;
        if (!first_projection) first_projection = t;
      }
    }

    if (k % opts.cadence == 0 || k == n_steps) {
      Diagnostics d = diagnose(state, t, reference_purity);
      d.projected = projected;
      if (observer) observer(state, d);
      ticks.push_back(std::move(d));
    }
  }
  return Run{std::move(ticks), std::move(state), first_projection};
}

}  // namespace hqc
