#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cubeshap/core.hpp"
#include "cubeshap/experiments.hpp"

namespace cubeshap {

enum class ReportFormat { Json, Csv, Table };

ReportFormat parse_format(std::string_view text);
const char* to_string(ReportFormat f) noexcept;

/// {method, delta_y, residual, rows, cols, values, row_totals, col_totals, seed}
std::string to_json(const ContributionMatrix& c, std::uint64_t seed);
/// label,<cols...>,total with a trailing total row.
std::string to_csv(const ContributionMatrix& c);
/// Aligned text table; `percent` prints values as signed percentages.
std::string to_table(const ContributionMatrix& c, bool percent = false);
std::string render(const ContributionMatrix& c, ReportFormat format, std::uint64_t seed, bool percent = false);

/// Reads a contribution report written by to_json.
ContributionMatrix parse_json_report(std::string_view text);

/// "+12.15%": two decimals, halves rounded away from zero, no negative zero.
std::string format_percent(double fraction, int decimals = 2);

/// Sub-cubes by |row total| descending, ties broken by label.
std::vector<std::pair<std::string, double>> rank_subcubes(const ContributionMatrix& c);
std::string ranking_to_json(const std::vector<std::pair<std::string, double>>& ranking, std::uint64_t seed);
std::string ranking_to_table(const std::vector<std::pair<std::string, double>>& ranking);

std::string to_json(const MetricReport& r);
/// x,mean,stderr rows for plotting.
std::string to_csv(const MetricReport& r);
std::string to_table(const MetricReport& r);

}  // namespace cubeshap
