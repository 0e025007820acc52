// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hqc/io.hpp"
#include "hqc/runner.hpp"
#include "support.hpp"

using namespace hqc;
using hqc_test::rng;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "[fail] ") + what);
  }
  void info(const std::string& what) { notes.push_back("[info] " + what); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

MeasurementScenario pointer_025(double t_final, int cadence) {
  return hqc_test::pointer_scenario(0.25, 6.0, 192, 4.0, 128, 0.025, t_final, cadence);
}

Run run_scenario(const MeasurementScenario& s) {
  return evolve(build_initial(s), s.observable, s.coupling, s.dt, s.t_final, s.evolve_options());
}

double worst_block_mass_drift(const Run& run) {
  double worst = 0.0;
  for (const Diagnostics& d : run.ticks)
    for (std::size_t i = 0; i < d.block_mass.size(); ++i)
      worst = std::max(worst, std::abs(d.block_mass[i] - run.ticks.front().block_mass[i]));
  return worst;
}

// 1. Harmonic oscillator, one full period on a 256^2 grid.
Verdict liouville_fidelity() {
  Verdict v;
  const PhaseGrid g(-6, 6, -6, 6, 256, 256);
  const ClassicalDensity rho0 = gaussian_state(g, 1.5, 0.0, 0.5, 0.5);
  const int steps = 2000;
  const LiouvilleSolver solver(g, ClassicalHamiltonian::harmonic(), 2.0 * std::numbers::pi / steps);
  ClassicalDensity rho = rho0;
  const double m0 = rho.mass();
  double drift = 0.0;
  for (int k = 0; k < steps; ++k) {
    rho = solver.step(rho);
    drift = std::max(drift, std::abs(rho.mass() - m0));
  }
  const double err = hqc_test::l2_relative(rho.values(), rho0.values());
  v.check(err <= 1e-2, "L2 relative error after one period " + fmt(err) + " (<= 1e-2)");
  v.check(drift <= 1e-8, "mass drift " + fmt(drift) + " (<= 1e-8)");
  return v;
}

// 2. Integral and trace forms of the mean value.
Verdict mean_value_ansatz() {
  Verdict v;
  const PhaseGrid g(-2, 3, -1.5, 2.5, 32, 28);
  const std::vector<Polynomial> catalog = {
      Polynomial::constant(1.0),
      Polynomial::monomial(1, 0),
      Polynomial::monomial(0, 1),
      Polynomial::monomial(1, 1),
      ClassicalHamiltonian::harmonic().as_polynomial(),
      Polynomial::monomial(0, 2, 0.5) + Polynomial::monomial(4, 0, 0.1),
      Polynomial::monomial(3, 0, -0.7) + Polynomial::monomial(1, 3, 2.0),
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ClassicalDensity rho = hqc_test::random_density(g, rng());
    for (const Polynomial& f : catalog) {
      const double a = mean_observable(f, rho), b = mean_observable_trace_form(f, rho);
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
  }
  v.check(worst <= 1e-12, "max difference over 100 densities x 7 observables " + fmt(worst) + " (<= 1e-12)");
  return v;
}

// 3. d = 1 reduces to the Liouville solver; degenerate eigenvalues leave the marginal alone.
Verdict reduction() {
  Verdict v;
  const PhaseGrid g(-6, 6, -6, 6, 96, 96);
  const ClassicalDensity rho0 = gaussian_state(g, 0.5, 0.25, 0.7, 0.7);
  Amplitudes one(1);
  one << 1.0;
  for (const auto& [name, pot] : {std::pair<std::string, CouplingPotential>{"V=p", pointer_coupling_p()},
                                  {"harmonic", ClassicalHamiltonian::harmonic()}}) {
    HybridState s = product_state(pure_from_amplitudes(one), rho0);
    ClassicalDensity rho = rho0;
    const AleksandrovPropagator prop(g, MeasuredObservable({0.8}), pot, 0.02, 1.0);
    const LiouvilleSolver solver(g, pot.scaled(0.8), 0.02);
    for (int k = 0; k < 100; ++k) {
      prop.step_in_place(s);
      rho = solver.step(rho);
    }
    const bool same = (s.upper(0, 0).real() == rho.values()).all() && (s.upper(0, 0).imag() == 0.0).all();
    v.check(same, "d=1 " + name + ": hybrid block identical to Liouville solver after 100 steps");
  }
  const Amplitudes c = hqc_test::random_amplitudes(3, rng());
  const HybridState s0 = product_state(pure_from_amplitudes(c), gaussian_state(g, 0, 0, 0.7, 0.7));
  for (const auto& [name, pot] : {std::pair<std::string, CouplingPotential>{"V=p", pointer_coupling_p()},
                                  {"harmonic", ClassicalHamiltonian::harmonic()}}) {
    const Run run = evolve(s0, MeasuredObservable({0.7, 0.7, 0.7}), pot, 0.02, 2.0);
    double worst = 0.0;
    for (const Diagnostics& d : run.ticks)
      worst = std::max(worst, (d.quantum_marginal - run.ticks.front().quantum_marginal).cwiseAbs().maxCoeff());
    v.check(worst <= 1e-8, "equal eigenvalues, " + name + ": marginal drift " + fmt(worst) + " (<= 1e-8)");
  }
  return v;
}

// 4. Pointer scenario: purity and decoherence.
Verdict noncausal_evolution() {
  Verdict v;
  const MeasurementScenario s = pointer_025(3.0, 2);
  const Run run = run_scenario(s);
  const double t_sep = 2.0 * s.sigma_q / 2.0;
  double purity_at_sep = 1.0;
  for (const Diagnostics& d : run.ticks)
    if (d.time <= t_sep + 1e-12) purity_at_sep = d.purity_ratio;
  v.check(purity_at_sep < 0.9,
          "raw hybrid purity ratio at t=" + fmt(t_sep) + " is " + fmt(purity_at_sep) + " (< 0.9)");

  const double cells = s.sigma_q / s.grid.dq();
  double worst = 0.0;
  for (const CurvePoint& c : decoherence_curve(run.ticks, 0, 1)) {
    const double oracle = std::exp(-2.0 * s.sigma_p * s.sigma_p * c.time * c.time);
    worst = std::max(worst, std::abs(c.value / oracle - 1.0));
  }
  v.check(cells >= 4.0 && worst <= 0.02, "decoherence curve vs exp(-2 sigma_p^2 t^2), " + fmt(cells) +
                                             " cells per sigma: max relative deviation " + fmt(worst) +
                                             " (<= 0.02)");

  MeasurementScenario enforced = s;
  enforced.enforce_positivity = true;
  const Run proj = run_scenario(enforced);
  v.info("with positivity enforced the purity ratio is " + fmt(proj.ticks.back().purity_ratio) +
         " after the first projection at t=" + fmt(proj.first_projection.value_or(NAN)));
  return v;
}

// 5. Correlated ansatz is not PSD; projection and the collapsed form are, and agree.
Verdict positivity_forcing() {
  Verdict v;
  const PhaseGrid g(-3, 3, -3, 3, 120, 120);
  const Amplitudes c = Amplitudes::Constant(2, Complex(1.0 / std::sqrt(2.0), 0.0));
  const PointTable pts = {{{1.0, 0.0}, {0.0, 0.0}}, {{0.0, 0.0}, {-1.0, 0.0}}};
  const HybridState a = ansatz_correlated(c, pts, 0.1, 0.1, g);
  const PointwiseMinimum pm = pointwise_min_eigenvalue(a);
  const double max_off = a.upper(0, 1).abs().maxCoeff();
  double oracle = INFINITY;
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(g.size()); ++k) {
    const double f11 = a.upper(0, 0)[k].real(), f22 = a.upper(1, 1)[k].real();
    oracle = std::min(oracle, 0.5 * (f11 + f22) - std::sqrt(0.25 * (f11 - f22) * (f11 - f22) +
                                                             std::norm(a.upper(0, 1)[k])));
  }
  v.check(pm.value <= -0.9 * max_off, "ansatz min eigenvalue " + fmt(pm.value) + " vs -0.9 max|f12| = " +
                                          fmt(-0.9 * max_off));
  // where the diagonal packets vanish the closed form reduces to -|f12|
  const double rel = std::abs(pm.value + max_off) / max_off;
  v.check(rel <= 0.05, "agreement with -max|f12| " + fmt(rel) + " (<= 0.05)");
  const double node_rel = std::abs(pm.value - oracle) / std::abs(oracle);
  v.check(node_rel <= 0.05, "agreement with the nodewise 2x2 closed form " + fmt(node_rel) + " (<= 0.05)");

  const MeasurementScenario s = pointer_025(2.0, 80);
  const HybridState projected =
      collapse_project(ansatz_correlated(s.amplitudes, catalog_points(s, 2.0), 0.25, 0.25, s.grid));
  const HybridState direct = collapsed_state(s.amplitudes, pointer_trajectories(s), 2.0, 0.25, 0.25, s.grid);
  const double pmin = std::min(pointwise_min_eigenvalue(projected).value, pointwise_min_eigenvalue(direct).value);
  v.check(pmin >= -1e-10, "projected and collapsed forms PSD: min eigenvalue " + fmt(pmin) + " (>= -1e-10)");
  double diff = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j) diff = std::max(diff, (projected.upper(i, j) - direct.upper(i, j)).abs().maxCoeff());
  v.check(diff <= 1e-8, "projection vs collapsed construction entrywise " + fmt(diff) + " (<= 1e-8)");
  return v;
}

// 6. Born weights from per-block mass conservation.
Verdict projection_weights() {
  Verdict v;
  double drift = worst_block_mass_drift(run_scenario(pointer_025(3.0, 4)));
  for (int k = 0; k < 3; ++k) {
    MeasurementScenario s = hqc_test::pointer_scenario(0.5, 7.0, 112, 4.0, 64, 0.025, 2.0, 8);
    s.amplitudes = hqc_test::random_amplitudes(3, rng());
    s.observable = MeasuredObservable({1.5, 0.0, -1.5});
    const Run run = run_scenario(s);
    drift = std::max(drift, worst_block_mass_drift(run));
    const QuantumDensity m = quantum_marginal(collapse_project(run.final_state));
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        err = std::max(err, std::abs(m(i, j) - (i == j ? std::norm(s.amplitudes[i]) : 0.0)));
    v.check(err <= 1e-6, "random amplitudes #" + std::to_string(k + 1) + ": collapsed marginal vs diag(|c_i|^2) " +
                             fmt(err) + " (<= 1e-6)");
  }
  v.check(drift <= 1e-8, "per-block mass drift over all runs " + fmt(drift) + " (<= 1e-8)");
  return v;
}

// 7. Entropy of the quantum marginal.
Verdict entropy_monotonicity() {
  Verdict v;
  std::vector<std::pair<std::string, MeasurementScenario>> catalog;
  catalog.emplace_back("pointer V=p", pointer_025(3.0, 4));
  {
    MeasurementScenario s = hqc_test::pointer_scenario(0.5, 7.0, 112, 4.0, 64, 0.025, 2.0, 4);
    s.amplitudes = hqc_test::random_amplitudes(3, rng());
    s.observable = MeasuredObservable({1.0, 0.0, -1.0});
    catalog.emplace_back("three-level V=p", s);
  }
  {
    MeasurementScenario s = hqc_test::pointer_scenario(0.5, 6.0, 96, 6.0, 96, 0.02, 1.5, 5);
    s.coupling = pointer_coupling_q();
    catalog.emplace_back("pointer V=q", s);
  }
  for (const auto& [name, s] : catalog) {
    const Run run = run_scenario(s);
    double worst_drop = 0.0;
    for (std::size_t k = 1; k < run.ticks.size(); ++k)
      worst_drop = std::max(worst_drop, run.ticks[k - 1].qm_entropy - run.ticks[k].qm_entropy);
    v.check(worst_drop <= 1e-3, name + ": largest entropy decrease " + fmt(worst_drop) + " (<= 1e-3), final S=" +
                                    fmt(run.ticks.back().qm_entropy));
  }
  MeasurementScenario equal = pointer_025(2.0, 4);
  equal.amplitudes = hqc_test::random_amplitudes(2, rng());
  equal.observable = MeasuredObservable({0.5, 0.5});
  MeasurementScenario idle = pointer_025(2.0, 4);
  idle.coupling = CouplingPotential::zero();
  for (const auto& [name, s] : {std::pair<std::string, MeasurementScenario>{"equal eigenvalues", equal},
                                {"V_cm = 0", idle}}) {
    const Run run = run_scenario(s);
    double drift = 0.0;
    for (const Diagnostics& d : run.ticks) drift = std::max(drift, std::abs(d.qm_entropy - run.ticks.front().qm_entropy));
    v.check(drift <= 1e-8, name + " control: entropy drift " + fmt(drift) + " (<= 1e-8)");
  }
  return v;
}

// 8. delta-limit study.
Verdict instantaneity() {
  Verdict v;
  const RunConfig cfg = load_config(std::filesystem::path(HQC_SOURCE_DIR) / "configs" / "study.ini");
  const DeltaLimitTable t = delta_limit_study(cfg.scenario, cfg.sigmas, StudyOptions{cfg.study_max_cells});
  const auto [i, j] = t.pair;
  const double gap = std::abs(cfg.scenario.observable.eigenvalue(i) - cfg.scenario.observable.eigenvalue(j));
  v.check(t.rows.size() == cfg.sigmas.size(), std::to_string(t.rows.size()) + " of " +
                                                   std::to_string(cfg.sigmas.size()) + " sigma values resolved");
  bool monotone = true, within = true;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const StudyRow& r = t.rows[k];
    if (!r.onset_time) {
      monotone = within = false;
      v.info("sigma=" + fmt(r.sigma) + ": no onset");
      continue;
    }
    const double oracle = r.sigma / gap;
    const double ratio = *r.onset_time / oracle;
    within = within && ratio >= 0.5 && ratio <= 2.0;
    if (k > 0 && t.rows[k - 1].onset_time) monotone = monotone && *r.onset_time < *t.rows[k - 1].onset_time;
    v.info("sigma=" + fmt(r.sigma) + ": onset " + fmt(*r.onset_time) + " (first tick " + fmt(r.dt * cfg.scenario.cadence) +
           "), sigma/dv " + fmt(oracle) + ", ratio " + fmt(ratio) + ", half-time " +
           (r.half_time ? fmt(*r.half_time) : std::string("beyond t_final")) + " (closed form " +
           fmt(gaussian_half_time(gap, r.sigma, cfg.scenario.hbar)) + ")");
  }
  v.check(monotone, "onset time strictly decreasing as sigma decreases");
  v.check(within, "onset time within a factor 2 of sigma/dv for every sigma");
  v.info("fitted onset exponent " + fmt(t.fit_exponent));
  return v;
}

// 9. Byte-identical CSVs across thread counts.
Verdict determinism() {
  Verdict v;
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "hqc_acceptance_determinism";
  fs::remove_all(root);
  RunConfig cfg = load_config(fs::path(HQC_SOURCE_DIR) / "configs" / "pointer.ini");
  std::vector<int> counts = {1, 2, 4};
  std::vector<fs::path> dirs;
  std::ostringstream log;
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
#endif
  for (int n : counts) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    cfg.output.directory = root / ("threads_" + std::to_string(n));
    execute(cfg, log);
    dirs.push_back(cfg.output.directory);
  }
#ifdef _OPENMP
  omp_set_num_threads(saved);
#endif
  for (const char* f : {"diagnostics.csv", "violation.csv", "margins.csv"}) {
    bool same = true;
    for (std::size_t k = 1; k < dirs.size(); ++k) same = same && read_text_file(dirs[k] / f) == read_text_file(dirs[0] / f);
    v.check(same, std::string(f) + " identical for 1, 2 and 4 threads");
  }
  fs::remove_all(root);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"Liouville fidelity", liouville_fidelity},
      {"mean-value ansatz equality", mean_value_ansatz},
      {"reduction consistency", reduction},
      {"noncausal evolution", noncausal_evolution},
      {"positivity forcing", positivity_forcing},
      {"projection-postulate weights", projection_weights},
      {"entropy monotonicity", entropy_monotonicity},
      {"instantaneity limit", instantaneity},
      {"determinism", determinism},
  };
  int failed = 0, k = 0;
  for (const auto& [name, fn] : criteria) {
    ++k;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.check(false, std::string("threw: ") + e.what());
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << k << " " << name << '\n';
    for (const std::string& n : v.notes) std::cout << "    " << n << '\n';
    std::cout.flush();
    failed += v.pass ? 0 : 1;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
