#include "hqc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "hqc/io.hpp"

namespace hqc {

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::kEvolve: return "evolve";
    case RunMode::kAnsatz: return "ansatz";
    case RunMode::kStudy: return "study";
  }
  return "?";
}

const char* to_string(InitialForm f) {
  return f == InitialForm::kProduct ? "product" : "collapsed";
}

const char* to_string(AnsatzForm f) {
  return f == AnsatzForm::kCorrelated ? "correlated" : "collapsed";
}

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string msg = "configuration has " + std::to_string(errors.size()) + " error(s):";
  for (const auto& e : errors) msg += "\n  - " + e;
  return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::invalid_argument(join_errors(errors)), errors_(std::move(errors)) {}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Known keys per section; `required` keys must be present.
struct KeySpec {
  const char* section;
  const char* key;
  bool required;
};

constexpr KeySpec kKeys[] = {
    {"quantum", "amplitudes", true},
    {"quantum", "eigenvalues", true},
    {"classical", "q_min", true},
    {"classical", "q_max", true},
    {"classical", "p_min", true},
    {"classical", "p_max", true},
    {"classical", "n_q", true},
    {"classical", "n_p", true},
    {"classical", "q0", false},
    {"classical", "p0", false},
    {"classical", "sigma_q", true},
    {"classical", "sigma_p", true},
    {"classical", "coupling", false},
    {"classical", "coupling_scale", false},
    {"classical", "coupling_coefficients", false},
    {"run", "name", false},
    {"run", "mode", false},
    {"run", "dt", true},
    {"run", "t_final", true},
    {"run", "cadence", false},
    {"run", "hbar", false},
    {"run", "initial", false},
    {"run", "ansatz", false},
    {"run", "tol_psd", false},
    {"run", "eps_neg", false},
    {"run", "mass_correction_cap", false},
    {"run", "boundary_sigmas", false},
    {"run", "boundary_fraction", false},
    {"run", "enforce_positivity", false},
    {"run", "sigmas", false},
    {"run", "study_max_cells", false},
    {"output", "directory", false},
    {"output", "diagnostics", false},
    {"output", "violation", false},
    {"output", "margins", false},
    {"output", "snapshots", false},
    {"output", "snapshot_cadence", false},
    {"output", "study_table", false},
};

constexpr const char* kRequiredSections[] = {"quantum", "classical", "run"};

struct Entry {
  std::string value;
  int line;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::vector<std::string>& errors)
      : entries_(std::move(entries)), errors_(errors) {}

  bool has(const std::string& k) const { return entries_.count(k) != 0; }

  std::optional<std::string> raw(const std::string& k) const {
    auto it = entries_.find(k);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
  }

  void number(const std::string& k, double& out) {
    auto it = entries_.find(k);
    if (it == entries_.end()) return;
    if (auto v = parse_real(it->second.value)) {
      out = *v;
    } else {
      bad(k, it->second, "a finite number");
    }
  }

  void integer(const std::string& k, int& out) {
    auto it = entries_.find(k);
    if (it == entries_.end()) return;
    const std::string& s = it->second.value;
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      bad(k, it->second, "an integer");
    } else {
      out = v;
    }
  }

  void boolean(const std::string& k, bool& out) {
    auto it = entries_.find(k);
    if (it == entries_.end()) return;
    std::string s = it->second.value;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") {
      out = true;
    } else if (s == "false" || s == "no" || s == "off" || s == "0") {
      out = false;
    } else {
      bad(k, it->second, "true or false");
    }
  }

  std::optional<std::vector<double>> number_list(const std::string& k) {
    auto it = entries_.find(k);
    if (it == entries_.end()) return std::nullopt;
    std::vector<double> out;
    for (const std::string& tok : split(it->second.value, ',')) {
      auto v = parse_real(tok);
      if (!v) {
        bad(k, it->second, "a comma-separated list of numbers");
        return std::nullopt;
      }
      out.push_back(*v);
    }
    return out;
  }

  void error(const std::string& k, const std::string& msg) {
    auto it = entries_.find(k);
    if (it != entries_.end()) {
      errors_.push_back("line " + std::to_string(it->second.line) + ": " + k + ": " + msg);
    } else {
      errors_.push_back(k + ": " + msg);
    }
  }

  static std::optional<double> parse_real(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
      return std::nullopt;
    }
    return v;
  }

 private:
  void bad(const std::string& k, const Entry& e, const char* expected) {
    errors_.push_back("line " + std::to_string(e.line) + ": " + k + " = '" + e.value +
                      "' is not " + expected);
  }

  std::map<std::string, Entry> entries_;
  std::vector<std::string>& errors_;
};

std::optional<Amplitudes> parse_amplitudes(Reader& r, std::vector<std::string>& notices) {
  const auto raw = r.raw("quantum.amplitudes");
  if (!raw) return std::nullopt;
  std::string cleaned;
  for (char ch : *raw) {
    if (ch != '(' && ch != ')') cleaned += ch;
  }
  const auto toks = split(cleaned, ',');
  if (toks.size() % 2 != 0) {
    r.error("quantum.amplitudes", "expected re,im pairs but found an odd number of values");
    return std::nullopt;
  }
  Amplitudes c(static_cast<Eigen::Index>(toks.size() / 2));
  for (std::size_t k = 0; k < toks.size(); k += 2) {
    auto re = Reader::parse_real(toks[k]);
    auto im = Reader::parse_real(toks[k + 1]);
    if (!re || !im) {
      r.error("quantum.amplitudes", "'" + toks[k] + "," + toks[k + 1] + "' is not a number pair");
      return std::nullopt;
    }
    c[static_cast<Eigen::Index>(k / 2)] = Complex(*re, *im);
  }
  if (c.size() < 1 || c.size() > kMaxQuantumDim) {
    r.error("quantum.amplitudes", "need between 1 and 16 amplitudes");
    return std::nullopt;
  }
  const double norm2 = c.squaredNorm();
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
    r.error("quantum.amplitudes", "amplitude vector cannot be normalised (zero norm)");
    return std::nullopt;
  }
  if (std::abs(norm2 - 1.0) > 1e-12) {
    c /= std::sqrt(norm2);
    notices.push_back("amplitudes normalised (sum |c_i|^2 was " + format_number(norm2) + ")");
  }
  return c;
}

std::optional<Polynomial> parse_coefficients(Reader& r) {
  const auto raw = r.raw("classical.coupling_coefficients");
  if (!raw) return std::nullopt;
  Polynomial f;
  for (const std::string& term : split(*raw, ',')) {
    const auto parts = split(term, ':');
    int a = -1, b = -1;
    std::optional<double> coef;
    if (parts.size() == 3) {
      std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), a);
      std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), b);
      coef = Reader::parse_real(parts[2]);
    }
    if (!coef || a < 0 || b < 0 || a + b > Polynomial::kMaxDegree) {
      r.error("classical.coupling_coefficients",
              "term '" + term + "' is not q_power:p_power:coefficient with total degree <= 4");
      return std::nullopt;
    }
    f.set_coefficient(a, b, f.coefficient(a, b) + *coef);
  }
  return f;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  std::vector<std::string> errors;
  std::map<std::string, Entry> entries;
  std::set<std::string> sections;
  RunConfig cfg;

  std::set<std::string> known;
  for (const KeySpec& k : kKeys) known.insert(std::string(k.section) + "." + k.key);
  std::set<std::string> known_sections = {"quantum", "classical", "run", "output"};

  std::string section;
  int line_no = 0;
  std::istringstream is{std::string(text)};
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') {
        errors.push_back("line " + std::to_string(line_no) + ": malformed section header");
        continue;
      }
      section = trim(body.substr(1, body.size() - 2));
      if (!known_sections.count(section)) {
        errors.push_back("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      sections.insert(section);
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (section.empty()) {
      errors.push_back("line " + std::to_string(line_no) + ": key '" + key +
                       "' appears before any section");
      continue;
    }
    const std::string full = section + "." + key;
    if (!known_sections.count(section)) continue;  // already reported
    if (!known.count(full)) {
      errors.push_back("line " + std::to_string(line_no) + ": unknown key '" + key + "' in [" +
                       section + "]");
      continue;
    }
    if (entries.count(full)) {
      errors.push_back("line " + std::to_string(line_no) + ": duplicate key " + full);
      continue;
    }
    entries[full] = Entry{value, line_no};
    cfg.user_keys.push_back(full);
  }

  for (const char* s : kRequiredSections) {
    if (!sections.count(s)) errors.push_back(std::string("missing section [") + s + "]");
  }
  for (const KeySpec& k : kKeys) {
    const std::string full = std::string(k.section) + "." + k.key;
    if (k.required && sections.count(k.section) && !entries.count(full)) {
      errors.push_back("missing key " + full);
    }
  }

  Reader r(entries, errors);
  MeasurementScenario& s = cfg.scenario;

  if (auto c = parse_amplitudes(r, cfg.notices)) s.amplitudes = *c;
  if (auto v = r.number_list("quantum.eigenvalues")) {
    try {
      s.observable = MeasuredObservable(*v);
    } catch (const std::invalid_argument& e) {
      r.error("quantum.eigenvalues", e.what());
    }
  }

  double q_min = 0, q_max = 0, p_min = 0, p_max = 0;
  int n_q = 0, n_p = 0;
  r.number("classical.q_min", q_min);
  r.number("classical.q_max", q_max);
  r.number("classical.p_min", p_min);
  r.number("classical.p_max", p_max);
  r.integer("classical.n_q", n_q);
  r.integer("classical.n_p", n_p);
  bool grid_ok = false;
  if (r.has("classical.q_min") && r.has("classical.q_max") && r.has("classical.p_min") &&
      r.has("classical.p_max") && r.has("classical.n_q") && r.has("classical.n_p")) {
    try {
      s.grid = PhaseGrid(q_min, q_max, p_min, p_max, n_q, n_p);
      grid_ok = true;
    } catch (const std::invalid_argument& e) {
      errors.push_back(std::string("classical grid: ") + e.what());
    }
  }
  r.number("classical.q0", s.q0);
  r.number("classical.p0", s.p0);
  r.number("classical.sigma_q", s.sigma_q);
  r.number("classical.sigma_p", s.sigma_p);
  r.number("classical.coupling_scale", cfg.coupling_scale);
  if (auto kind = r.raw("classical.coupling")) cfg.coupling_kind = *kind;
  const auto coefficients = parse_coefficients(r);
  if (cfg.coupling_kind == "p") {
    s.coupling = pointer_coupling_p(cfg.coupling_scale);
  } else if (cfg.coupling_kind == "q") {
    s.coupling = pointer_coupling_q(cfg.coupling_scale);
  } else if (cfg.coupling_kind == "zero") {
    s.coupling = CouplingPotential::zero();
  } else if (cfg.coupling_kind == "harmonic") {
    s.coupling = ClassicalHamiltonian::harmonic().scaled(cfg.coupling_scale);
  } else if (cfg.coupling_kind == "polynomial") {
    if (!coefficients) {
      if (!r.has("classical.coupling_coefficients")) {
        r.error("classical.coupling_coefficients", "required when coupling = polynomial");
      }
    } else {
      s.coupling = ClassicalHamiltonian::polynomial(*coefficients * cfg.coupling_scale);
    }
  } else {
    r.error("classical.coupling", "'" + cfg.coupling_kind +
                                      "' is not one of p, q, zero, harmonic, polynomial");
  }
  if (coefficients && cfg.coupling_kind != "polynomial") {
    r.error("classical.coupling_coefficients", "only allowed with coupling = polynomial");
  }

  if (auto name = r.raw("run.name")) cfg.name = *name;
  if (auto mode = r.raw("run.mode")) {
    if (*mode == "evolve") cfg.mode = RunMode::kEvolve;
    else if (*mode == "ansatz") cfg.mode = RunMode::kAnsatz;
    else if (*mode == "study") cfg.mode = RunMode::kStudy;
    else r.error("run.mode", "'" + *mode + "' is not one of evolve, ansatz, study");
  }
  if (auto v = r.raw("run.initial")) {
    if (*v == "product") cfg.initial = InitialForm::kProduct;
    else if (*v == "collapsed") cfg.initial = InitialForm::kCollapsed;
    else r.error("run.initial", "'" + *v + "' is not one of product, collapsed");
  }
  if (auto v = r.raw("run.ansatz")) {
    if (*v == "correlated") cfg.ansatz = AnsatzForm::kCorrelated;
    else if (*v == "collapsed") cfg.ansatz = AnsatzForm::kCollapsed;
    else r.error("run.ansatz", "'" + *v + "' is not one of correlated, collapsed");
  }
  r.number("run.dt", s.dt);
  r.number("run.t_final", s.t_final);
  r.integer("run.cadence", s.cadence);
  r.number("run.hbar", s.hbar);
  r.number("run.tol_psd", s.tol_psd_rel);
  r.number("run.eps_neg", s.transport.eps_neg_rel);
  r.number("run.mass_correction_cap", s.transport.mass_correction_cap);
  r.number("run.boundary_sigmas", s.boundary_sigmas);
  r.number("run.boundary_fraction", s.boundary_fraction);
  r.boolean("run.enforce_positivity", s.enforce_positivity);
  if (auto v = r.number_list("run.sigmas")) cfg.sigmas = *v;
  r.integer("run.study_max_cells", cfg.study_max_cells);

  if (!(s.transport.eps_neg_rel >= 0.0)) r.error("run.eps_neg", "must be non-negative");
  if (!(s.transport.mass_correction_cap >= 0.0)) {
    r.error("run.mass_correction_cap", "must be non-negative");
  }
  if (!(s.boundary_sigmas >= 0.0)) r.error("run.boundary_sigmas", "must be non-negative");
  if (!(s.boundary_fraction >= 0.0)) r.error("run.boundary_fraction", "must be non-negative");
  if (cfg.study_max_cells < PhaseGrid::kMinCells) {
    r.error("run.study_max_cells", "must be at least " + std::to_string(PhaseGrid::kMinCells));
  }
  if (cfg.mode == RunMode::kStudy) {
    if (cfg.sigmas.empty()) {
      r.error("run.sigmas", "study mode needs a sigma list");
    } else {
      for (std::size_t k = 1; k < cfg.sigmas.size(); ++k) {
        if (!(cfg.sigmas[k] < cfg.sigmas[k - 1])) {
          r.error("run.sigmas", "must be strictly decreasing");
          break;
        }
      }
      for (double sg : cfg.sigmas) {
        if (!(sg > 0.0)) {
          r.error("run.sigmas", "values must be positive");
          break;
        }
      }
    }
  }

  if (auto v = r.raw("output.directory")) {
    if (v->empty()) r.error("output.directory", "must not be empty");
    cfg.output.directory = *v;
  }
  r.boolean("output.diagnostics", cfg.output.diagnostics);
  r.boolean("output.violation", cfg.output.violation);
  r.boolean("output.margins", cfg.output.margins);
  r.boolean("output.snapshots", cfg.output.snapshots);
  r.integer("output.snapshot_cadence", cfg.output.snapshot_cadence);
  r.boolean("output.study_table", cfg.output.study_table);
  if (cfg.output.snapshot_cadence < 0) {
    r.error("output.snapshot_cadence", "must be non-negative");
  } else if (cfg.output.snapshot_cadence > 0 && s.cadence > 0 &&
             cfg.output.snapshot_cadence % s.cadence != 0) {
    r.error("output.snapshot_cadence", "must be a multiple of run.cadence");
  }

  // Scenario-level checks (normalisation, resolution, step bounds) only
  // make sense once every individual key parsed.
  if (errors.empty() && grid_ok) {
    for (const std::string& p : s.problems()) errors.push_back(p);
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

std::vector<std::pair<std::string, std::string>> resolved_keys(const RunConfig& cfg) {
  const MeasurementScenario& s = cfg.scenario;
  auto num = [](double v) { return format_number(v); };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  auto list = [&](const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + num(v[k]);
    return out;
  };
  std::string amps;
  for (Eigen::Index k = 0; k < s.amplitudes.size(); ++k) {
    amps += (k ? ", " : "") + std::string("(") + num(s.amplitudes[k].real()) + "," +
            num(s.amplitudes[k].imag()) + ")";
  }
  std::string coefficients;
  if (cfg.coupling_kind == "polynomial") coefficients = s.coupling.as_polynomial().to_string();

  return {
      {"quantum.amplitudes", amps},
      {"quantum.eigenvalues", list(s.observable.eigenvalues())},
      {"classical.q_min", num(s.grid.q_min())},
      {"classical.q_max", num(s.grid.q_max())},
      {"classical.p_min", num(s.grid.p_min())},
      {"classical.p_max", num(s.grid.p_max())},
      {"classical.n_q", std::to_string(s.grid.n_q())},
      {"classical.n_p", std::to_string(s.grid.n_p())},
      {"classical.q0", num(s.q0)},
      {"classical.p0", num(s.p0)},
      {"classical.sigma_q", num(s.sigma_q)},
      {"classical.sigma_p", num(s.sigma_p)},
      {"classical.coupling", cfg.coupling_kind + " -> V_cm = " + s.coupling.describe()},
      {"classical.coupling_scale", num(cfg.coupling_scale)},
      {"classical.coupling_coefficients", coefficients.empty() ? "(unused)" : coefficients},
      {"run.name", cfg.name},
      {"run.mode", to_string(cfg.mode)},
      {"run.dt", num(s.dt)},
      {"run.t_final", num(s.t_final)},
      {"run.cadence", std::to_string(s.cadence)},
      {"run.hbar", num(s.hbar)},
      {"run.initial", to_string(cfg.initial)},
      {"run.ansatz", to_string(cfg.ansatz)},
      {"run.tol_psd", num(s.tol_psd_rel)},
      {"run.eps_neg", num(s.transport.eps_neg_rel)},
      {"run.mass_correction_cap", num(s.transport.mass_correction_cap)},
      {"run.boundary_sigmas", num(s.boundary_sigmas)},
      {"run.boundary_fraction", num(s.boundary_fraction)},
      {"run.enforce_positivity", flag(s.enforce_positivity)},
      {"run.sigmas", cfg.sigmas.empty() ? "(none)" : list(cfg.sigmas)},
      {"run.study_max_cells", std::to_string(cfg.study_max_cells)},
      {"output.directory", cfg.output.directory.string()},
      {"output.diagnostics", flag(cfg.output.diagnostics)},
      {"output.violation", flag(cfg.output.violation)},
      {"output.margins", flag(cfg.output.margins)},
      {"output.snapshots", flag(cfg.output.snapshots)},
      {"output.snapshot_cadence", std::to_string(cfg.output.snapshot_cadence)},
      {"output.study_table", flag(cfg.output.study_table)},
  };
}

}  // namespace hqc
