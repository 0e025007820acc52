#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hqc/collapse.hpp"

namespace hqc {

/// File-system failure; the message always names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

/// Field snapshot: header `q_min q_max p_min p_max n_q n_p t`, then one
/// value per node per line in storage order.
void write_field(std::ostream& os, const PhaseGrid& grid, const RealField& values, double t);

enum class BlockPart { kReal, kImag };

/// Block snapshot: the field header followed by `block i j re|im` (1-based).
void write_block(std::ostream& os, const HybridState& state, int i, int j, BlockPart part, double t);
/// All stored blocks (i <= j), real then imaginary part, back to back.
void write_state(std::ostream& os, const HybridState& state, double t);

struct FieldSnapshot {
  PhaseGrid grid;
  double time = 0.0;
  RealField values;
  std::optional<int> block_i;  // 1-based, present for block snapshots
  std::optional<int> block_j;
  std::optional<BlockPart> part;
};

/// Reads the next snapshot; nullopt at end of stream. Throws
/// std::invalid_argument on malformed input.
std::optional<FieldSnapshot> read_field(std::istream& is);

std::string diagnostics_csv(const std::vector<Diagnostics>& ticks, int dim);
/// `onset_time,q,p,worst_value,worst_time`; header only when there is no onset.
std::string violation_csv(const ViolationReport& report);
/// `t,margin_12,...` per tick.
std::string margins_csv(const ViolationReport& report, int dim);
/// `sigma,onset_time,half_time,fit_exponent`; missing values print as nan.
std::string study_csv(const DeltaLimitTable& table);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace hqc
