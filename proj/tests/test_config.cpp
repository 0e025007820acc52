#include <doctest.h>

#include <string>

#include "hqc/config.hpp"
#include "hqc/runner.hpp"

using namespace hqc;

namespace {

const char* kPointer = R"(# minimal two-level pointer
[quantum]
amplitudes = (1,0), (1,0)
eigenvalues = 1, -1

[classical]
q_min = -4
q_max = 4
p_min = -4
p_max = 4
n_q = 64
n_p = 64
sigma_q = 0.5
sigma_p = 0.5

[run]
dt = 0.05
t_final = 1
)";

std::string with(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::vector<std::string> errors_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

bool mentions(const std::vector<std::string>& errs, const std::string& needle) {
  for (const auto& e : errs)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("minimal pointer config resolves defaults") {
  const RunConfig cfg = parse_config(kPointer);
  CHECK(cfg.mode == RunMode::kEvolve);
  CHECK(cfg.scenario.dim() == 2);
  CHECK(std::abs(cfg.scenario.amplitudes[0] - Complex(1.0 / std::sqrt(2.0), 0.0)) <= 1e-15);
  CHECK(std::abs(cfg.scenario.amplitudes[1] - Complex(1.0 / std::sqrt(2.0), 0.0)) <= 1e-15);
  REQUIRE(cfg.notices.size() == 1);
  CHECK(cfg.notices[0].find("normalised") != std::string::npos);
  CHECK(cfg.scenario.hbar == 1.0);
  CHECK(cfg.scenario.tol_psd_rel == 1e-6);
  CHECK(cfg.scenario.cadence == 1);
  CHECK(cfg.coupling_kind == "p");
  CHECK(cfg.user_keys.size() == 12);
}

TEST_CASE("every error is reported") {
  SUBCASE("missing dt") {
    const auto errs = errors_of(with(kPointer, "dt = 0.05\n", ""));
    REQUIRE(errs.size() == 1);
    CHECK(errs[0] == "missing key run.dt");
  }
  SUBCASE("unknown key and section, several at once") {
    std::string text = with(kPointer, "[run]\n", "[run]\nspeed = 3\n");
    text += "[extras]\nx = 1\n";
    text = with(text, "n_q = 64", "n_q = lots");
    const auto errs = errors_of(text);
    CHECK(errs.size() >= 3);
    CHECK(mentions(errs, "unknown key 'speed'"));
    CHECK(mentions(errs, "unknown section [extras]"));
    CHECK(mentions(errs, "classical.n_q"));
  }
  SUBCASE("missing section") {
    std::string text = kPointer;
    text = text.substr(0, text.find("[run]"));
    const auto errs = errors_of(text);
    CHECK(mentions(errs, "missing section [run]"));
  }
  SUBCASE("duplicate key") {
    CHECK(mentions(errors_of(with(kPointer, "dt = 0.05", "dt = 0.05\ndt = 0.1")), "duplicate key run.dt"));
  }
  SUBCASE("zero amplitudes") {
    CHECK(mentions(errors_of(with(kPointer, "(1,0), (1,0)", "(0,0), (0,0)")), "cannot be normalised"));
  }
  SUBCASE("unresolvable sigma") {
    CHECK(mentions(errors_of(with(kPointer, "sigma_q = 0.5", "sigma_q = 0.1")), "below the grid resolution"));
  }
  SUBCASE("CFL violation is caught before any compute") {
    CHECK(mentions(errors_of(with(kPointer, "dt = 0.05", "dt = 0.2")), "phase resolution"));
  }
  SUBCASE("bad enumerations and study lists") {
    std::string text = with(kPointer, "[run]\n", "[run]\nmode = study\nsigmas = 0.2, 0.4\ninitial = mixed\n");
    const auto errs = errors_of(text);
    CHECK(mentions(errs, "strictly decreasing"));
    CHECK(mentions(errs, "'mixed'"));
    CHECK(mentions(errors_of(with(kPointer, "[run]\n", "[run]\nmode = study\n")), "needs a sigma list"));
  }
  SUBCASE("line numbers are reported") {
    const auto errs = errors_of(with(kPointer, "[run]\n", "[run]\nbogus line\n"));
    REQUIRE(!errs.empty());
    CHECK(errs[0].rfind("line 17: ", 0) == 0);
  }
}

TEST_CASE("couplings and options") {
  RunConfig cfg = parse_config(with(with(kPointer, "sigma_p = 0.5\n", "sigma_p = 0.5\ncoupling = q\ncoupling_scale = 2\n"),
                                    "dt = 0.05", "dt = 0.02"));
  CHECK(cfg.scenario.coupling.as_polynomial().coefficient(1, 0) == 2.0);

  cfg = parse_config(
      with(kPointer, "sigma_p = 0.5\n", "sigma_p = 0.5\ncoupling = polynomial\ncoupling_coefficients = 0:1:0.5, 2:0:0.1\n"));
  CHECK(cfg.scenario.coupling.as_polynomial().coefficient(0, 1) == 0.5);
  CHECK(cfg.scenario.coupling.as_polynomial().coefficient(2, 0) == 0.1);

  CHECK(mentions(errors_of(with(kPointer, "sigma_p = 0.5\n", "sigma_p = 0.5\ncoupling = polynomial\n")),
                 "required when coupling = polynomial"));

  cfg = parse_config(with(kPointer, "[run]\n", "[run]\ncadence = 5\nhbar = 2 ; comment\n") +
                     "[output]\nsnapshots = true\nsnapshot_cadence = 10\ndirectory = somewhere\n");
  CHECK(cfg.scenario.cadence == 5);
  CHECK(cfg.scenario.hbar == 2.0);
  CHECK(cfg.output.snapshots);
  CHECK(cfg.output.directory == "somewhere");
  CHECK(mentions(errors_of(with(kPointer, "[run]\n", "[run]\ncadence = 5\n") + "[output]\nsnapshot_cadence = 7\n"),
                 "multiple of run.cadence"));
}

TEST_CASE("describe lists every user key with its resolved value") {
  const std::string text = with(kPointer, "[run]\n", "[run]\ncadence = 4\ntol_psd = 1e-5\n");
  const RunConfig cfg = parse_config(text);
  const std::string out = describe(cfg);
  const auto keys = resolved_keys(cfg);
  for (const std::string& u : cfg.user_keys) {
    bool found = false;
    for (const auto& [k, v] : keys) {
      if (k != u) continue;
      found = true;
      CHECK(out.find("  " + k + " = " + v + "\n") != std::string::npos);
    }
    CHECK_MESSAGE(found, u);
  }
  CHECK(out.find("run.hbar = 1  (default)") != std::string::npos);
  CHECK(out.find("run.tol_psd = 1e-05\n") != std::string::npos);
  CHECK(out.find("binding constraint: ") != std::string::npos);
  CHECK(out.find("estimated steps: 20") != std::string::npos);
  CHECK(out.find("notice: amplitudes normalised") != std::string::npos);
}

TEST_CASE("describe memory estimate and study jobs") {
  const std::string big = with(with(with(kPointer, "n_q = 64", "n_q = 256"), "n_p = 64", "n_p = 256"),
                               "dt = 0.05", "dt = 0.025");
  const std::string out = describe(parse_config(big));
  CHECK(out.find("d^2*n_q*n_p = 4*256*256 = 262144 complex values per buffer (524288 reals") != std::string::npos);

  const std::string study = with(kPointer, "[run]\n", "[run]\nmode = study\nsigmas = 0.8, 0.4, 0.2, 0.1\n");
  const std::string s = describe(parse_config(study));
  CHECK(s.find("planned study jobs: 4") != std::string::npos);
  for (int k = 1; k <= 4; ++k) CHECK(s.find("  job " + std::to_string(k) + ": sigma=") != std::string::npos);
}
