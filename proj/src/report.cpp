#include "cubeshap/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "cubeshap/error.hpp"

namespace cubeshap {

using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string aligned(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += "  ";
      out += i == 0 ? pad_right(row[i], width[i]) : pad_left(row[i], width[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

ReportFormat parse_format(std::string_view text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "table") return ReportFormat::Table;
  throw Error(Errc::InvalidConfig, "unknown output format '" + std::string(text) + "' (json, csv, table)");
}

const char* to_string(ReportFormat f) noexcept {
  switch (f) {
    case ReportFormat::Json: return "json";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Table: return "table";
  }
  return "?";
}

std::string format_percent(double fraction, int decimals) {
  const double scale = std::pow(10.0, decimals);
  double v = std::round(fraction * 100.0 * scale) / scale;
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.*f%%", decimals, v);
  return buf;
}

std::string to_json(const ContributionMatrix& c, std::uint64_t seed) {
  json values = json::array();
  for (std::size_t r = 0; r < c.values().rows(); ++r) {
    json row = json::array();
    for (std::size_t k = 0; k < c.values().cols(); ++k) row.push_back(c(r, k));
    values.push_back(std::move(row));
  }
  json j;
  j["method"] = c.method();
  j["delta_y"] = c.delta_y();
  j["residual"] = c.residual();
  j["rows"] = c.rows();
  j["cols"] = c.cols();
  j["values"] = std::move(values);
  j["row_totals"] = c.values().row_sums();
  j["col_totals"] = c.values().column_sums();
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

ContributionMatrix parse_json_report(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::SyntaxError, std::string("malformed report: ") + e.what());
  }
  try {
    auto rows = j.at("rows").get<std::vector<std::string>>();
    auto cols = j.at("cols").get<std::vector<std::string>>();
    const auto& vals = j.at("values");
    if (vals.size() != rows.size()) throw Error(Errc::ShapeMismatch, "report values do not match its rows");
    Matrix m(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (vals[r].size() != cols.size()) throw Error(Errc::ShapeMismatch, "report values do not match its columns");
      for (std::size_t k = 0; k < cols.size(); ++k) m(r, k) = vals[r][k].get<double>();
    }
    return ContributionMatrix(make_labels(std::move(rows)), make_labels(std::move(cols)), std::move(m),
                              j.at("delta_y").get<double>(), j.at("method").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(Errc::SyntaxError, std::string("malformed report: ") + e.what());
  }
}

std::string to_csv(const ContributionMatrix& c) {
  std::string out = "sub_cube";
  for (const auto& col : c.cols()) out += "," + quote_csv(col);
  out += ",total\n";
  const auto rows = c.values().row_sums();
  for (std::size_t r = 0; r < c.rows().size(); ++r) {
    out += quote_csv(c.rows()[r]);
    for (std::size_t k = 0; k < c.cols().size(); ++k) out += "," + shortest(c(r, k));
    out += "," + shortest(rows[r]) + "\n";
  }
  out += "total";
  for (double v : c.values().column_sums()) out += "," + shortest(v);
  out += "," + shortest(c.values().total()) + "\n";
  return out;
}

std::string to_table(const ContributionMatrix& c, bool percent) {
  auto fmt = [&](double v) {
    if (percent) return format_percent(v);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.6g", v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"sub_cube"};
  header.insert(header.end(), c.cols().begin(), c.cols().end());
  header.push_back("total");
  cells.push_back(std::move(header));
  const auto rows = c.values().row_sums();
  for (std::size_t r = 0; r < c.rows().size(); ++r) {
    std::vector<std::string> line{c.rows()[r]};
    for (std::size_t k = 0; k < c.cols().size(); ++k) line.push_back(fmt(c(r, k)));
    line.push_back(fmt(rows[r]));
    cells.push_back(std::move(line));
  }
  std::vector<std::string> total{"total"};
  for (double v : c.values().column_sums()) total.push_back(fmt(v));
  total.push_back(fmt(c.values().total()));
  cells.push_back(std::move(total));

  std::string out = aligned(cells);
  out += "method " + c.method() + ", delta_y " + fmt(c.delta_y()) + ", residual " + shortest(c.residual()) + "\n";
  return out;
}

std::string render(const ContributionMatrix& c, ReportFormat format, std::uint64_t seed, bool percent) {
  switch (format) {
    case ReportFormat::Json: return to_json(c, seed);
    case ReportFormat::Csv: return to_csv(c);
    case ReportFormat::Table: return to_table(c, percent);
  }
  return {};
}

std::vector<std::pair<std::string, double>> rank_subcubes(const ContributionMatrix& c) {
  auto ranking = marginalize(c, Axis::Rows);
  std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a.second), mb = std::abs(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  return ranking;
}

std::string ranking_to_json(const std::vector<std::pair<std::string, double>>& ranking, std::uint64_t seed) {
  json items = json::array();
  for (const auto& [label, total] : ranking) items.push_back({{"sub_cube", label}, {"total", total}});
  json j;
  j["ranking"] = std::move(items);
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

std::string ranking_to_table(const std::vector<std::pair<std::string, double>>& ranking) {
  std::vector<std::vector<std::string>> cells{{"rank", "sub_cube", "total"}};
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.6g", ranking[i].second);
    cells.push_back({std::to_string(i + 1), ranking[i].first, buf});
  }
  return aligned(cells);
}

std::string to_json(const MetricReport& r) {
  json points = json::array();
  for (const auto& p : r.points)
    points.push_back({{"x", p.x}, {"mean", p.mean}, {"stderr", p.stderr_mean}, {"repetitions", p.repetitions}});
  json j;
  j["experiment"] = r.name;
  j["x"] = r.x_label;
  j["metric"] = r.metric;
  j["seed"] = r.seed;
  j["points"] = std::move(points);
  return j.dump(2) + "\n";
}

std::string to_csv(const MetricReport& r) {
  std::string out = "x,mean,stderr\n";
  for (const auto& p : r.points) out += shortest(p.x) + "," + shortest(p.mean) + "," + shortest(p.stderr_mean) + "\n";
  return out;
}

std::string to_table(const MetricReport& r) {
  std::vector<std::vector<std::string>> cells{{r.x_label, r.metric, "stderr", "reps"}};
  for (const auto& p : r.points) {
    char x[32], m[32], s[32];
    std::snprintf(x, sizeof x, "%g", p.x);
    std::snprintf(m, sizeof m, "%.6f", p.mean);
    std::snprintf(s, sizeof s, "%.6f", p.stderr_mean);
    cells.push_back({x, m, s, std::to_string(p.repetitions)});
  }
  return aligned(cells);
}

}  // namespace cubeshap
