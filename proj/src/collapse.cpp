#include "hqc/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace hqc {

// --- Scenario ---------------------------------------------------------------

std::vector<std::string> MeasurementScenario::problems() const {
  std::vector<std::string> out;
  auto fail = [&](const std::string& msg) { out.push_back(msg); };

  const int d = dim();
  if (d < 1 || d > kMaxQuantumDim) fail("amplitude vector must have 1..16 entries");
  if (!amplitudes.allFinite()) fail("amplitudes must be finite");
  if (d >= 1 && std::abs(amplitudes.squaredNorm() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "amplitudes are not normalised: sum |c_i|^2 = " << amplitudes.squaredNorm();
    fail(os.str());
  }
  if (observable.dim() != d) {
    std::ostringstream os;
    os << "observable has " << observable.dim() << " eigenvalues but there are " << d
       << " amplitudes";
    fail(os.str());
  }
  if (!coupling.as_polynomial().all_finite()) fail("coupling coefficients must be finite");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) fail("hbar must be positive");
  if (cadence < 1) fail("cadence must be >= 1");
  if (!(tol_psd_rel > 0.0)) fail("tol_psd must be positive");
  if (!grid.contains(q0, p0)) {
    std::ostringstream os;
    os << "start point (" << q0 << ", " << p0 << ") lies outside the grid";
    fail(os.str());
  }
  if (!(sigma_q >= 2.0 * grid.dq())) {
    std::ostringstream os;
    os << "sigma_q=" << sigma_q << " is below the grid resolution (needs >= 2*dq = "
       << 2.0 * grid.dq() << ")";
    fail(os.str());
  }
  if (!(sigma_p >= 2.0 * grid.dp())) {
    std::ostringstream os;
    os << "sigma_p=" << sigma_p << " is below the grid resolution (needs >= 2*dp = "
       << 2.0 * grid.dp() << ")";
    fail(os.str());
  }
  try {
    step_count(dt, t_final);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (out.empty() && observable.dim() == d) {
    const StepBounds b = step_bounds(grid, observable, coupling, dt, hbar);
    if (!b.ok()) fail("step bounds violated: " + b.binding());
  }
  return out;
}

void MeasurementScenario::validate() const {
  const auto list = problems();
  if (list.empty()) return;
  std::string msg = "invalid measurement scenario:";
  for (const auto& p : list) msg += "\n  - " + p;
  throw std::invalid_argument(msg);
}

BoundaryGuard MeasurementScenario::boundary() const {
  return BoundaryGuard{sigma_q, sigma_p, boundary_sigmas, boundary_fraction};
}

EvolveOptions MeasurementScenario::evolve_options() const {
  EvolveOptions o;
  o.cadence = cadence;
  o.step.transport = transport;
  o.boundary = boundary();
  o.tol_psd_rel = tol_psd_rel;
  if (enforce_positivity) o.on_violation = collapse_project;
  return o;
}

HybridState build_initial(const MeasurementScenario& s) {
  s.validate();
  return product_state(pure_from_amplitudes(s.amplitudes),
                       gaussian_state(s.grid, s.q0, s.p0, s.sigma_q, s.sigma_p), s.hbar);
}

// --- Ansatz builders --------------------------------------------------------

namespace {

void require_normalised(const Amplitudes& c) {
  if (c.size() < 1 || c.size() > kMaxQuantumDim) {
    throw std::invalid_argument("amplitude vector must have 1..16 entries");
  }
  if (!c.allFinite() || std::abs(c.squaredNorm() - 1.0) > 1e-10) {
    throw std::invalid_argument("amplitudes must be finite with sum |c_i|^2 = 1");
  }
}

}  // namespace

HybridState ansatz_correlated(const Amplitudes& c, const PointTable& points, double sigma_q,
                              double sigma_p, const PhaseGrid& grid, double hbar) {
  require_normalised(c);
  const int d = static_cast<int>(c.size());
  if (static_cast<int>(points.size()) != d) throw std::invalid_argument("point table must be d x d");
  for (const auto& row : points) {
    if (static_cast<int>(row.size()) != d) throw std::invalid_argument("point table must be d x d");
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const PhasePoint& a = points[i][j];
      const PhasePoint& b = points[j][i];
      if (a.q != b.q || a.p != b.p) {
        std::ostringstream os;
        os << "point table is not symmetric at (" << i + 1 << ", " << j + 1 << ")";
        throw std::invalid_argument(os.str());
      }
    }
  }

  HybridState state(grid, d, hbar);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const Complex w = c[i] * std::conj(c[j]);
      if (w == Complex(0.0, 0.0)) continue;
      const PhasePoint x = points[i][j];
      const ClassicalDensity g = gaussian_state(grid, x.q, x.p, sigma_q, sigma_p);
      state.set_block(i, j, ComplexField(g.values().cast<Complex>() * w));
    }
  }
  return state;
}

HybridState collapsed_state(const Amplitudes& c, std::span<const Trajectory> trajectories, double t,
                            double sigma_q, double sigma_p, const PhaseGrid& grid, double hbar) {
  require_normalised(c);
  const int d = static_cast<int>(c.size());
  if (static_cast<int>(trajectories.size()) != d) {
    throw std::invalid_argument("collapsed_state needs one trajectory per eigenstate");
  }
  HybridState state(grid, d, hbar);
  for (int i = 0; i < d; ++i) {
    const double w = std::norm(c[i]);
    if (w == 0.0) continue;
    const PhasePoint x = trajectories[static_cast<std::size_t>(i)].at(t);
    const ClassicalDensity g = gaussian_state(grid, x.q, x.p, sigma_q, sigma_p);
    state.set_block(i, i, ComplexField(g.values().cast<Complex>() * w));
  }
  return state;
}

std::vector<Trajectory> pointer_trajectories(const MeasurementScenario& s) {
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(s.dim()));
  for (int i = 0; i < s.dim(); ++i) {
    out.push_back(flow_trajectory(s.coupling.scaled(s.observable.eigenvalue(i)), s.q0, s.p0,
                                  s.t_final, s.dt));
  }
  return out;
}

PointTable catalog_points(const MeasurementScenario& s, double t) {
  const int d = s.dim();
  PointTable table(static_cast<std::size_t>(d), std::vector<PhasePoint>(static_cast<std::size_t>(d)));
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const double mean = 0.5 * (s.observable.eigenvalue(i) + s.observable.eigenvalue(j));
      const Trajectory tr = flow_trajectory(s.coupling.scaled(mean), s.q0, s.p0, t, s.dt);
      table[i][j] = tr.points.back();
      table[j][i] = tr.points.back();
    }
  }
  return table;
}

// --- Violation detection and projection ------------------------------------

ViolationReport detect_violation(std::span<const Diagnostics> ticks, double tol_psd_rel) {
  if (ticks.empty()) throw std::invalid_argument("detect_violation needs at least one tick");
  ViolationReport r;
  r.tolerance_rel = tol_psd_rel;
  r.worst_value = std::numeric_limits<double>::infinity();
  for (const Diagnostics& d : ticks) {
    if (d.min_eig < r.worst_value) {
      r.worst_value = d.min_eig;
      r.worst_time = d.time;
      r.worst_location = d.min_location;
    }
    if (!r.onset_time && d.min_eig < -tol_psd_rel * d.max_diag) {
      r.onset_time = d.time;
      r.onset_location = d.min_location;
      r.onset_value = d.min_eig;
    }
    r.margins.push_back(MarginSample{d.time, d.margin});
  }
  return r;
}

HybridState collapse_project(const HybridState& state) {
  const int d = state.dim();
  HybridState out(state.grid(), d, state.hbar());
  const double tr = state.trace();
  if (!(tr > 0.0)) throw std::invalid_argument("cannot project a state with non-positive trace");
  for (int i = 0; i < d; ++i) {
    if (tr == 1.0) {
      out.set_block(i, i, state.upper(i, i));
    } else {
      out.set_block(i, i, ComplexField(state.upper(i, i) / tr));
    }
  }
  return out;
}

std::vector<CurvePoint> decoherence_curve(std::span<const Diagnostics> ticks, int i, int j) {
  if (ticks.empty()) throw std::invalid_argument("decoherence_curve needs at least one tick");
  const auto d = ticks.front().quantum_marginal.rows();
  if (i == j || i < 0 || j < 0 || i >= d || j >= d) {
    throw std::invalid_argument("decoherence_curve needs two distinct valid indices");
  }
  const double start = std::abs(ticks.front().quantum_marginal(i, j));
  if (!(start > 0.0)) {
    throw std::invalid_argument("decoherence_curve: initial coherence rho_ij is zero");
  }
  std::vector<CurvePoint> out;
  out.reserve(ticks.size());
  for (const Diagnostics& t : ticks) {
    out.push_back({t.time, std::abs(t.quantum_marginal(i, j)) / start});
  }
  return out;
}

double gaussian_decoherence(double gap, double sigma_p, double t, double hbar) {
  const double x = gap * sigma_p * t / hbar;
  return std::exp(-0.5 * x * x);
}

double gaussian_half_time(double gap, double sigma_p, double hbar) {
  return hbar * std::sqrt(2.0 * std::numbers::ln2) / (std::abs(gap) * sigma_p);
}

// --- delta-limit study ------------------------------------------------------

std::pair<int, int> decohering_pair(const MeasurementScenario& s) {
  std::pair<int, int> best{-1, -1};
  double best_gap = -1.0;
  for (int i = 0; i < s.dim(); ++i) {
    for (int j = i + 1; j < s.dim(); ++j) {
      if (s.amplitudes[i] == Complex(0.0, 0.0) || s.amplitudes[j] == Complex(0.0, 0.0)) continue;
      const double gap = std::abs(s.observable.eigenvalue(i) - s.observable.eigenvalue(j));
      if (gap > best_gap) {
        best_gap = gap;
        best = {i, j};
      }
    }
  }
  return best;
}

std::optional<MeasurementScenario> study_scenario(const MeasurementScenario& base, double sigma,
                                                  const StudyOptions& opts,
                                                  std::vector<std::string>& warnings) {
  const PhaseGrid& g0 = base.grid;
  auto scaled_cells = [&](int n, double base_sigma) {
    const double want = std::ceil(static_cast<double>(n) * base_sigma / sigma - 1e-9);
    return static_cast<int>(std::clamp(want, static_cast<double>(PhaseGrid::kMinCells),
                                       static_cast<double>(opts.max_cells)));
  };
  const int n_q = scaled_cells(g0.n_q(), base.sigma_q);
  const int n_p = scaled_cells(g0.n_p(), base.sigma_p);
  const PhaseGrid grid(g0.q_min(), g0.q_max(), g0.p_min(), g0.p_max(), n_q, n_p);
  if (sigma < 2.0 * grid.dq() || sigma < 2.0 * grid.dp()) {
    std::ostringstream os;
    os << "sigma=" << sigma << " skipped: under-resolved on a " << n_q << "x" << n_p
       << " grid (cap " << opts.max_cells << " cells per axis)";
    warnings.push_back(os.str());
    return std::nullopt;
  }

  MeasurementScenario s = base;
  s.grid = grid;
  s.sigma_q = sigma;
  s.sigma_p = sigma;
  // Keep the Courant number of the base run, then shrink dt so that
  // t_final is a whole number of steps.
  double dt = base.dt * std::min(grid.dq() / g0.dq(), grid.dp() / g0.dp());
  if (base.t_final > 0.0) {
    const double steps = std::ceil(base.t_final / dt - 1e-9);
    dt = base.t_final / steps;
  }
  s.dt = dt;
  const auto problems = s.problems();
  if (!problems.empty()) {
    std::ostringstream os;
    os << "sigma=" << sigma << " skipped: " << problems.front();
    warnings.push_back(os.str());
    return std::nullopt;
  }
  return s;
}

namespace {

double fit_log_slope(const std::vector<StudyRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const StudyRow& r : rows) {
    if (!r.onset_time || !(*r.onset_time > 0.0)) continue;
    const double x = std::log(r.sigma);
    const double y = std::log(*r.onset_time);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / denom;
}

}  // namespace

DeltaLimitTable delta_limit_study(const MeasurementScenario& base, std::span<const double> sigmas,
                                  const StudyOptions& opts) {
  if (sigmas.empty()) throw std::invalid_argument("sigma list is empty");
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("sigma values must be positive");
  }
  for (std::size_t k = 1; k < sigmas.size(); ++k) {
    if (!(sigmas[k] < sigmas[k - 1])) {
      throw std::invalid_argument("sigma list must be strictly decreasing");
    }
  }
  const auto pair = decohering_pair(base);
  if (pair.first < 0) {
    throw std::invalid_argument("study needs two eigenstates with non-zero amplitude");
  }

  DeltaLimitTable table;
  table.pair = pair;
  std::vector<std::optional<MeasurementScenario>> jobs;
  for (double s : sigmas) jobs.push_back(study_scenario(base, s, opts, table.warnings));

  std::vector<std::optional<StudyRow>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const int n_jobs = static_cast<int>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < n_jobs; ++k) {
    if (!jobs[k]) continue;
    const MeasurementScenario& s = *jobs[k];
    try {
      MeasurementScenario raw = s;
      raw.enforce_positivity = false;
      const Run run = evolve(build_initial(raw), raw.observable, raw.coupling, raw.dt, raw.t_final,
                             raw.evolve_options());
      const ViolationReport rep = detect_violation(run.ticks, raw.tol_psd_rel);
      StudyRow row;
      row.sigma = s.sigma_q;
      row.onset_time = rep.onset_time;
      for (const CurvePoint& c : decoherence_curve(run.ticks, pair.first, pair.second)) {
        if (c.value <= 0.5) {
          row.half_time = c.time;
          break;
        }
      }
      row.n_q = s.grid.n_q();
      row.n_p = s.grid.n_p();
      row.dt = s.dt;
      results[k] = row;
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }

  for (std::size_t k = 0; k < results.size(); ++k) {
    if (!errors[k].empty()) {
      std::ostringstream os;
      os << "sigma=" << sigmas[k] << " failed: " << errors[k];
      throw NumericalBreakdown(os.str());
    }
    if (results[k]) table.rows.push_back(*results[k]);
  }
  table.fit_exponent = fit_log_slope(table.rows);
  return table;
}

}  // namespace hqc
