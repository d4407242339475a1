#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cubeshap/core.hpp"
#include "cubeshap/gam.hpp"
#include "cubeshap/measure.hpp"
#include "cubeshap/report.hpp"

namespace cubeshap {

/// Everything one attribution run needs. Loaded from a key-value file:
///
///   input       = requests.csv
///   timestep    = minute
///   explicand   = 10:01
///   reference   = 10:00            # comma list selects expected mode
///   attributes  = data_center, os_version
///   drill       = data_center
///   filter      = os_version=v1    # optional parent cube bindings
///   submeasure succ_cnt  = sum(is_success)
///   submeasure total_cnt = count(*)
///   measure     = "succ_cnt / total_cnt"
///   engine      = auto             # plus samples, riemann_steps, seed, scope, threads
///   out         = report.json
///   format      = json
struct RunConfig {
  std::filesystem::path input;
  std::string timestep;
  std::string explicand;
  std::vector<std::string> references;
  std::vector<std::string> attributes;
  std::vector<std::string> drill;
  std::vector<CubePredicate::Binding> filter;
  std::vector<SubMeasure> submeasures;
  std::string measure;
  EngineConfig engine;
  std::filesystem::path out;
  ReportFormat format = ReportFormat::Json;
};

/// Relative input/out paths are resolved against `base_dir`.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Checks required keys, explicand not among references, drill within attributes.
void validate(const RunConfig& config);

}  // namespace cubeshap
