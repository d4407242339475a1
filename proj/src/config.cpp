#include "cubeshap/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <string_view>

#include "cubeshap/error.hpp"

namespace cubeshap {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw Error(Errc::InvalidConfig, "line " + std::to_string(line) + ": " + what);
}

/// Strips a trailing comment outside quotes and unwraps one layer of quotes.
std::string value_of(std::string_view raw, std::size_t line) {
  bool quoted = false;
  std::size_t end = raw.size();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '"') quoted = !quoted;
    if (raw[i] == '#' && !quoted) {
      end = i;
      break;
    }
  }
  if (quoted) fail(line, "unterminated quote");
  auto v = trim(raw.substr(0, end));
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return std::string(v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    auto comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    auto item = trim(std::string_view(v).substr(start, comma - start));
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_unsigned(const std::string& v, std::size_t line, const char* key) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) fail(line, std::string(key) + " must be a non-negative integer");
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    auto body = trim(text);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) fail(line, "expected 'key = value'");
    const auto key = std::string(trim(body.substr(0, eq)));
    const auto value = value_of(body.substr(eq + 1), line);

    if (key.rfind("submeasure", 0) == 0 && key.size() > 10 && (key[10] == ' ' || key[10] == '\t')) {
      const auto name = std::string(trim(std::string_view(key).substr(10)));
      if (name.empty()) fail(line, "submeasure needs a name");
      try {
        cfg.submeasures.push_back({name, AggregatorKind::parse(value)});
      } catch (const Error& e) {
        fail(line, e.what());
      }
      continue;
    }
    if (!seen.insert(key).second) fail(line, "duplicate key '" + key + "'");

    if (key == "input") cfg.input = resolve(base_dir, value);
    else if (key == "timestep") cfg.timestep = value;
    else if (key == "explicand") cfg.explicand = value;
    else if (key == "reference") cfg.references = split_list(value);
    else if (key == "attributes") cfg.attributes = split_list(value);
    else if (key == "drill") cfg.drill = split_list(value);
    else if (key == "filter") {
      for (const auto& item : split_list(value)) {
        const auto at = item.find('=');
        if (at == std::string::npos) fail(line, "filter entries are attribute=value");
        cfg.filter.push_back({std::string(trim(std::string_view(item).substr(0, at))),
                              std::string(trim(std::string_view(item).substr(at + 1)))});
      }
    } else if (key == "measure") cfg.measure = value;
    else if (key == "engine") cfg.engine.engine = parse_engine(value);
    else if (key == "samples") cfg.engine.samples = parse_unsigned<std::size_t>(value, line, "samples");
    else if (key == "riemann_steps") cfg.engine.riemann_steps = parse_unsigned<std::size_t>(value, line, "riemann_steps");
    else if (key == "seed") cfg.engine.seed = parse_unsigned<std::uint64_t>(value, line, "seed");
    else if (key == "scope") cfg.engine.scope = parse_scope(value);
    else if (key == "threads") cfg.engine.threads = parse_unsigned<unsigned>(value, line, "threads");
    else if (key == "out") cfg.out = resolve(base_dir, value);
    else if (key == "format") cfg.format = parse_format(value);
    else fail(line, "unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

void validate(const RunConfig& cfg) {
  auto missing = [](const char* key) { throw Error(Errc::InvalidConfig, std::string("missing '") + key + "'"); };
  if (cfg.input.empty()) missing("input");
  if (cfg.timestep.empty()) missing("timestep");
  if (cfg.explicand.empty()) missing("explicand");
  if (cfg.references.empty()) missing("reference");
  if (cfg.measure.empty()) missing("measure");
  if (cfg.drill.empty()) missing("drill");
  if (std::find(cfg.references.begin(), cfg.references.end(), cfg.explicand) != cfg.references.end())
    throw Error(Errc::InvalidConfig, "explicand label '" + cfg.explicand + "' is also a reference");
  for (const auto& d : cfg.drill)
    if (std::find(cfg.attributes.begin(), cfg.attributes.end(), d) == cfg.attributes.end())
      throw Error(Errc::InvalidConfig, "drill dimension '" + d + "' is not an attribute column");
  for (const auto& b : cfg.filter)
    if (std::find(cfg.attributes.begin(), cfg.attributes.end(), b.attribute) == cfg.attributes.end())
      throw Error(Errc::InvalidConfig, "filter attribute '" + b.attribute + "' is not an attribute column");
}

}  // namespace cubeshap
