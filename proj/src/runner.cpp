#include "hqc/runner.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hqc/io.hpp"

namespace hqc {

namespace {

namespace fs = std::filesystem;

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string snapshot_name(long step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "state_%08ld.txt", step);
  return buf;
}

class ArtifactWriter {
 public:
  ArtifactWriter(const RunConfig& cfg, RunOutcome& out) : cfg_(cfg), out_(out) {
    ensure_directory(cfg.output.directory);
    if (cfg.output.snapshots && cfg.mode != RunMode::kStudy) {
      ensure_directory(cfg.output.directory / "snapshots");
    }
  }

  void text(const std::string& name, const std::string& content) {
    const fs::path p = cfg_.output.directory / name;
    write_text_file(p, content);
    out_.files.push_back(p);
  }

  void snapshot(const HybridState& state, double t) {
    if (!cfg_.output.snapshots) return;
    const long step = std::lround(t / cfg_.scenario.dt);
    const int every = cfg_.output.snapshot_cadence;
    if (every > 0 && step % every != 0) return;
    std::ostringstream os;
    write_state(os, state, t);
    text((fs::path("snapshots") / snapshot_name(step)).string(), os.str());
  }

 private:
  const RunConfig& cfg_;
  RunOutcome& out_;
};

void write_run_reports(const RunConfig& cfg, ArtifactWriter& w, const RunOutcome& out) {
  const int d = cfg.scenario.dim();
  if (cfg.output.diagnostics) w.text("diagnostics.csv", diagnostics_csv(out.ticks, d));
  if (out.violation) {
    if (cfg.output.violation) w.text("violation.csv", violation_csv(*out.violation));
    if (cfg.output.margins) w.text("margins.csv", margins_csv(*out.violation, d));
  }
}

void run_evolve(const RunConfig& cfg, RunOutcome& out, std::ostream& log) {
  const MeasurementScenario& s = cfg.scenario;
  ArtifactWriter writer(cfg, out);

  HybridState initial = build_initial(s);
  if (cfg.initial == InitialForm::kCollapsed) {
    const std::vector<Trajectory> none(static_cast<std::size_t>(s.dim()),
                                       Trajectory{{0.0}, {PhasePoint{s.q0, s.p0}}});
    initial = collapsed_state(s.amplitudes, none, 0.0, s.sigma_q, s.sigma_p, s.grid, s.hbar);
  }

  EvolveOptions opts = s.evolve_options();
  // Positivity enforcement hides the violation from the tick history, so
  // remember where the first projection happened.
  std::optional<PointwiseMinimum> first_hit;
  if (opts.on_violation) {
    opts.on_violation = [&first_hit](const HybridState& st) {
      if (!first_hit) first_hit = pointwise_min_eigenvalue(st);
      return collapse_project(st);
    };
  }
  Run r = evolve(initial, s.observable, s.coupling, s.dt, s.t_final, opts,
                 [&writer](const HybridState& st, const Diagnostics& d) { writer.snapshot(st, d.time); });

  ViolationReport rep = detect_violation(r.ticks, s.tol_psd_rel);
  if (r.first_projection && (!rep.onset_time || *r.first_projection < *rep.onset_time)) {
    rep.onset_time = r.first_projection;
    rep.onset_location = first_hit->location;
    rep.onset_value = first_hit->scaled;
    if (first_hit->scaled < rep.worst_value) {
      rep.worst_value = first_hit->scaled;
      rep.worst_time = *r.first_projection;
      rep.worst_location = first_hit->location;
    }
  }
  out.ticks = std::move(r.ticks);
  out.violation = rep;
  write_run_reports(cfg, writer, out);

  const Diagnostics& last = out.ticks.back();
  log << "evolve: " << out.ticks.size() << " ticks, final t=" << last.time
      << ", trace=" << format_number(last.trace) << ", purity ratio="
      << format_number(last.purity_ratio) << ", qm entropy=" << format_number(last.qm_entropy)
      << '\n';
  if (rep.onset_time) {
    log << "positivity violation: onset t=" << *rep.onset_time << " at (q, p) = ("
        << rep.onset_location.q << ", " << rep.onset_location.p
        << "), worst scaled eigenvalue " << rep.worst_value << " at t=" << rep.worst_time;
    if (r.first_projection) log << " (off-diagonal blocks annihilated from t=" << *r.first_projection << ")";
    log << '\n';
    out.exit_code = kExitViolation;
  } else {
    log << "no positivity violation\n";
  }
}

void run_ansatz(const RunConfig& cfg, RunOutcome& out, std::ostream& log) {
  const MeasurementScenario& s = cfg.scenario;
  s.validate();
  ArtifactWriter writer(cfg, out);
  const long n_steps = step_count(s.dt, s.t_final);
  const double reference = hybrid_purity_functional(build_initial(s));
  const std::vector<Trajectory> trajectories =
      cfg.ansatz == AnsatzForm::kCollapsed ? pointer_trajectories(s) : std::vector<Trajectory>{};

  for (long k = 0; k <= n_steps; ++k) {
    if (k % s.cadence != 0 && k != n_steps) continue;
    const double t = static_cast<double>(k) * s.dt;
    const HybridState st =
        cfg.ansatz == AnsatzForm::kCorrelated
            ? ansatz_correlated(s.amplitudes, catalog_points(s, t), s.sigma_q, s.sigma_p, s.grid, s.hbar)
            : collapsed_state(s.amplitudes, trajectories, t, s.sigma_q, s.sigma_p, s.grid, s.hbar);
    writer.snapshot(st, t);
    out.ticks.push_back(diagnose(st, t, reference));
  }
  out.violation = detect_violation(out.ticks, s.tol_psd_rel);
  write_run_reports(cfg, writer, out);
  log << "ansatz (" << to_string(cfg.ansatz) << "): " << out.ticks.size() << " ticks, "
      << (out.violation->violated() ? "not positive semidefinite from t=" +
                                           format_number(*out.violation->onset_time)
                                     : std::string("positive semidefinite throughout"))
      << '\n';
}

void run_study(const RunConfig& cfg, RunOutcome& out, std::ostream& log) {
  ArtifactWriter writer(cfg, out);
  DeltaLimitTable table =
      delta_limit_study(cfg.scenario, cfg.sigmas, StudyOptions{cfg.study_max_cells});
  for (const std::string& w : table.warnings) log << "warning: " << w << '\n';
  if (cfg.output.study_table) {
    writer.text("study.csv", study_csv(table));
    std::string warnings;
    for (const std::string& w : table.warnings) warnings += w + '\n';
    writer.text("study_warnings.txt", warnings);
  }
  log << "study: " << table.rows.size() << " of " << cfg.sigmas.size()
      << " sigma values run, fitted onset exponent " << format_number(table.fit_exponent) << '\n';
  out.study = std::move(table);
}

}  // namespace

RunOutcome execute(const RunConfig& cfg, std::ostream& log) {
  for (const std::string& n : cfg.notices) log << "notice: " << n << '\n';
  RunOutcome out;
  switch (cfg.mode) {
    case RunMode::kEvolve: run_evolve(cfg, out, log); break;
    case RunMode::kAnsatz: run_ansatz(cfg, out, log); break;
    case RunMode::kStudy: run_study(cfg, out, log); break;
  }
  return out;
}

int run(const RunConfig& cfg, std::ostream& log) {
  try {
    return execute(cfg, log).exit_code;
  } catch (const NumericalBreakdown& e) {
    log << "numerical breakdown: " << e.what() << '\n';
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
  }
  return kExitFailure;
}

std::string describe(const RunConfig& cfg) {
  const MeasurementScenario& s = cfg.scenario;
  std::ostringstream os;
  os << "scenario " << cfg.name << " (mode " << to_string(cfg.mode) << ")\n";
  for (const std::string& n : cfg.notices) os << "notice: " << n << '\n';

  os << "resolved keys:\n";
  for (const auto& [key, value] : resolved_keys(cfg)) {
    bool user = false;
    for (const std::string& u : cfg.user_keys) user = user || u == key;
    os << "  " << key << " = " << value << (user ? "" : "  (default)") << '\n';
  }

  const StepBounds b = step_bounds(s.grid, s.observable, s.coupling, s.dt, s.hbar);
  os << "stability bounds:\n"
     << "  transport Courant q=" << format_number(b.transport.q_courant)
     << " p=" << format_number(b.transport.p_courant) << " (limit 1)\n"
     << "  phase number " << format_number(b.phase_number) << " (limit 0.5)\n"
     << "  binding constraint: " << b.binding() << '\n';

  const long d = s.dim();
  const long values = d * d * static_cast<long>(s.grid.n_q()) * s.grid.n_p();
  os << "memory estimate: d^2*n_q*n_p = " << d * d << "*" << s.grid.n_q() << "*" << s.grid.n_p()
     << " = " << values << " complex values per buffer (" << 2 * values << " reals, "
     << format_number(static_cast<double>(values) * 16.0 / (1024.0 * 1024.0)) << " MiB)\n";

  const long steps = step_count(s.dt, s.t_final);
  os << "estimated steps: " << steps << " (dt=" << format_number(s.dt)
     << ", t_final=" << format_number(s.t_final) << "), diagnostics ticks: "
     << (steps == 0 ? 1 : 1 + steps / s.cadence + (steps % s.cadence ? 1 : 0)) << '\n';

  if (cfg.mode == RunMode::kStudy) {
    os << "planned study jobs: " << cfg.sigmas.size() << '\n';
    std::vector<std::string> warnings;
    int k = 0;
    for (double sigma : cfg.sigmas) {
      ++k;
      const std::size_t before = warnings.size();
      const auto job = study_scenario(s, sigma, StudyOptions{cfg.study_max_cells}, warnings);
      if (job) {
        os << "  job " << k << ": sigma=" << format_number(sigma) << " grid " << job->grid.n_q()
           << "x" << job->grid.n_p() << " dt=" << format_number(job->dt)
           << " steps=" << step_count(job->dt, job->t_final) << '\n';
      } else {
        os << "  job " << k << ": sigma=" << format_number(sigma) << " skipped ("
           << (warnings.size() > before ? warnings.back() : std::string("unresolved")) << ")\n";
      }
    }
  }
  return os.str();
}

int apply_thread_override() {
#ifdef _OPENMP
  if (const char* env = std::getenv("HQC_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace hqc
