#include "hqc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace hqc {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void write_header(std::ostream& os, const PhaseGrid& g, double t) {
  os << format_number(g.q_min()) << ' ' << format_number(g.q_max()) << ' '
     << format_number(g.p_min()) << ' ' << format_number(g.p_max()) << ' ' << g.n_q() << ' '
     << g.n_p() << ' ' << format_number(t);
}

void write_values(std::ostream& os, const RealField& values) {
  std::string buf;
  buf.reserve(static_cast<std::size_t>(values.size()) * 24);
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    buf += format_number(values[k]);
    buf += '\n';
  }
  os << buf;
}

double parse_double(const std::string& tok, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw std::invalid_argument(std::string("snapshot: bad ") + what + " '" + tok + "'");
  }
  return v;
}

int parse_int(const std::string& tok, const char* what) {
  int v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw std::invalid_argument(std::string("snapshot: bad ") + what + " '" + tok + "'");
  }
  return v;
}

}  // namespace

void write_field(std::ostream& os, const PhaseGrid& grid, const RealField& values, double t) {
  if (static_cast<std::size_t>(values.size()) != grid.size()) {
    throw std::invalid_argument("field size does not match grid");
  }
  write_header(os, grid, t);
  os << '\n';
  write_values(os, values);
}

void write_block(std::ostream& os, const HybridState& state, int i, int j, BlockPart part,
                 double t) {
  write_header(os, state.grid(), t);
  os << " block " << i + 1 << ' ' << j + 1 << ' ' << (part == BlockPart::kReal ? "re" : "im")
     << '\n';
  const ComplexField f = state.block(i, j);
  write_values(os, part == BlockPart::kReal ? RealField(f.real()) : RealField(f.imag()));
}

void write_state(std::ostream& os, const HybridState& state, double t) {
  for (int i = 0; i < state.dim(); ++i) {
    for (int j = i; j < state.dim(); ++j) {
      write_block(os, state, i, j, BlockPart::kReal, t);
      write_block(os, state, i, j, BlockPart::kImag, t);
    }
  }
}

std::optional<FieldSnapshot> read_field(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) break;
  }
  if (line.empty()) return std::nullopt;

  std::istringstream hs(line);
  std::vector<std::string> tok;
  for (std::string s; hs >> s;) tok.push_back(s);
  if (tok.size() != 7 && tok.size() != 11) {
    throw std::invalid_argument("snapshot: header must have 7 or 11 tokens, got '" + line + "'");
  }
  FieldSnapshot snap;
  snap.grid = PhaseGrid(parse_double(tok[0], "q_min"), parse_double(tok[1], "q_max"),
                        parse_double(tok[2], "p_min"), parse_double(tok[3], "p_max"),
                        parse_int(tok[4], "n_q"), parse_int(tok[5], "n_p"));
  snap.time = parse_double(tok[6], "time");
  if (tok.size() == 11) {
    if (tok[7] != "block" || (tok[10] != "re" && tok[10] != "im")) {
      throw std::invalid_argument("snapshot: malformed block header '" + line + "'");
    }
    snap.block_i = parse_int(tok[8], "block index");
    snap.block_j = parse_int(tok[9], "block index");
    snap.part = tok[10] == "re" ? BlockPart::kReal : BlockPart::kImag;
  }
  snap.values.resize(static_cast<Eigen::Index>(snap.grid.size()));
  for (Eigen::Index k = 0; k < snap.values.size(); ++k) {
    if (!std::getline(is, line)) throw std::invalid_argument("snapshot: truncated value list");
    snap.values[k] = parse_double(line, "value");
  }
  return snap;
}

std::string diagnostics_csv(const std::vector<Diagnostics>& ticks, int dim) {
  std::string out = diagnostics_csv_header(dim) + '\n';
  for (const Diagnostics& d : ticks) out += diagnostics_csv_row(d) + '\n';
  return out;
}

std::string violation_csv(const ViolationReport& r) {
  std::string out = "onset_time,q,p,worst_value,worst_time\n";
  if (r.onset_time) {
    out += format_number(*r.onset_time) + ',' + format_number(r.onset_location.q) + ',' +
           format_number(r.onset_location.p) + ',' + format_number(r.worst_value) + ',' +
           format_number(r.worst_time) + '\n';
  }
  return out;
}

std::string margins_csv(const ViolationReport& r, int dim) {
  std::string out = "t";
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) out += ",margin_" + pair_label(i, j, dim);
  out += '\n';
  for (const MarginSample& m : r.margins) {
    out += format_number(m.time);
    for (double v : m.margin) out += ',' + format_number(v);
    out += '\n';
  }
  return out;
}

std::string study_csv(const DeltaLimitTable& table) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::string out = "sigma,onset_time,half_time,fit_exponent\n";
  for (const StudyRow& r : table.rows) {
    out += format_number(r.sigma) + ',' + format_number(r.onset_time.value_or(nan)) + ',' +
           format_number(r.half_time.value_or(nan)) + ',' + format_number(table.fit_exponent) +
           '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << content;
  os.flush();
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace hqc
