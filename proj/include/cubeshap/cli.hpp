#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cubeshap/config.hpp"
#include "cubeshap/core.hpp"
#include "cubeshap/error.hpp"

namespace cubeshap {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

int exit_code(ErrorCategory category) noexcept;

/// Loads the store, routes additive measures through the pre-aggregated engines
/// and everything else through the record-level game. Throws Error.
ContributionMatrix run_attribution(const RunConfig& config);

/// Writes the report to config.out (or `out` when unset). Returns an exit code;
/// diagnostics on `err` name the failing stage.
int cmd_attribute(const RunConfig& config, std::ostream& out, std::ostream& err);
/// Sub-cubes ordered by |row total|, in config.format.
int cmd_rank(const RunConfig& config, std::ostream& out, std::ostream& err);

struct ExperimentRequest {
  std::string name;  // rq1, rq2 or berkeley
  std::uint64_t seed = 42;
  std::optional<std::size_t> repetitions;
  /// Sample sizes for rq1, decay factors for rq2.
  std::vector<double> points;
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
};

/// Writes <out_dir>/<name>.json and <name>.csv and prints a summary table.
int cmd_experiment(const ExperimentRequest& request, std::ostream& out, std::ostream& err);

}  // namespace cubeshap
