#include "cubeshap/cube.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "cubeshap/error.hpp"

namespace cubeshap {

std::uint32_t RecordStore::Column::intern(std::string_view value) {
  auto it = lookup.find(value);
  if (it != lookup.end()) return it->second;
  const auto code = static_cast<std::uint32_t>(dictionary.size());
  dictionary.emplace_back(value);
  lookup.emplace(std::string(value), code);
  return code;
}

std::optional<std::uint32_t> RecordStore::Column::find(std::string_view value) const {
  auto it = lookup.find(value);
  if (it == lookup.end()) return std::nullopt;
  return it->second;
}

RecordStore::Builder::Builder(StoreSchema schema) {
  store_.schema_ = std::move(schema);
  store_.attributes_.resize(store_.schema_.attributes.size());
  store_.measures_.resize(store_.schema_.measures.size());
}

RecordStore::Builder& RecordStore::Builder::add(std::string_view timestep,
                                                std::span<const std::string> attributes,
                                                std::span<const std::optional<std::string>> measures) {
  if (attributes.size() != store_.attributes_.size() || measures.size() != store_.measures_.size())
    throw Error(Errc::ShapeMismatch, "record does not match the store schema");
  store_.timestep_.codes.push_back(store_.timestep_.intern(timestep));
  for (std::size_t a = 0; a < attributes.size(); ++a)
    store_.attributes_[a].codes.push_back(store_.attributes_[a].intern(attributes[a]));
  for (std::size_t m = 0; m < measures.size(); ++m) {
    auto& col = store_.measures_[m];
    if (!measures[m]) {
      col.codes.push_back(kNull);
      continue;
    }
    const std::size_t before = col.dictionary.size();
    const std::uint32_t code = col.intern(*measures[m]);
    col.codes.push_back(code);
    if (col.dictionary.size() != before) {
      const std::string& text = col.dictionary.back();
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      const bool ok = ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(v);
      col.numbers.push_back(ok ? v : 0.0);
      col.numeric = col.numeric && ok;
    }
  }
  ++store_.rows_;
  return *this;
}

RecordStore RecordStore::Builder::build() && { return std::move(store_); }

// ---------------------------------------------------------------------------
// CSV

namespace {

/// Splits one logical CSV record; quoted fields may contain commas, quotes and newlines.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

RecordStore RecordStore::from_csv(std::istream& in, const StoreSchema& schema) {
  std::vector<std::string> header;
  if (!read_csv_record(in, header)) throw Error(Errc::NoRecords, "no records: input has no header row");
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::UnknownColumn, "column '" + name + "' missing from CSV header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ts_col = column(schema.timestep);
  std::vector<std::size_t> attr_cols, measure_cols;
  for (const auto& a : schema.attributes) attr_cols.push_back(column(a));
  for (const auto& m : schema.measures) measure_cols.push_back(column(m));

  Builder builder(schema);
  std::vector<std::string> fields, attrs(attr_cols.size());
  std::vector<std::optional<std::string>> measures(measure_cols.size());
  std::size_t line = 1;
  while (read_csv_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size())
      throw Error(Errc::InvalidConfig, "CSV record " + std::to_string(line) + " has " +
                                           std::to_string(fields.size()) + " fields, header has " +
                                           std::to_string(header.size()));
    for (std::size_t a = 0; a < attr_cols.size(); ++a) attrs[a] = fields[attr_cols[a]];
    for (std::size_t m = 0; m < measure_cols.size(); ++m) {
      const auto& f = fields[measure_cols[m]];
      measures[m] = f.empty() ? std::nullopt : std::optional<std::string>(f);
    }
    builder.add(fields[ts_col], attrs, measures);
  }
  auto store = std::move(builder).build();
  if (store.empty()) throw Error(Errc::NoRecords, "no records: input has a header but no data rows");
  return store;
}

RecordStore RecordStore::from_csv(const std::filesystem::path& path, const StoreSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  return from_csv(in, schema);
}

// ---------------------------------------------------------------------------
// Accessors

std::set<std::string> RecordStore::domain(const std::string& attribute) const {
  const auto& col = attributes_[attribute_index(attribute)];
  std::vector<bool> seen(col.dictionary.size(), false);
  for (auto c : col.codes) seen[c] = true;
  std::set<std::string> out;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) out.insert(col.dictionary[i]);
  return out;
}

std::set<std::string> RecordStore::timesteps() const {
  return {timestep_.dictionary.begin(), timestep_.dictionary.end()};
}

std::size_t RecordStore::attribute_index(const std::string& name) const {
  const auto& a = schema_.attributes;
  auto it = std::find(a.begin(), a.end(), name);
  if (it == a.end()) throw Error(Errc::UnknownAttribute, "unknown attribute '" + name + "'");
  return static_cast<std::size_t>(it - a.begin());
}

std::size_t RecordStore::measure_index(const std::string& name) const {
  const auto& m = schema_.measures;
  auto it = std::find(m.begin(), m.end(), name);
  if (it == m.end()) throw Error(Errc::UnknownColumn, "unknown measure column '" + name + "'");
  return static_cast<std::size_t>(it - m.begin());
}

std::optional<std::uint32_t> RecordStore::timestep_lookup(std::string_view label) const {
  return timestep_.find(label);
}

std::optional<std::uint32_t> RecordStore::attribute_lookup(std::size_t attr, std::string_view value) const {
  return attributes_[attr].find(value);
}

const std::string& RecordStore::attribute_value(std::size_t attr, std::size_t record) const {
  const auto& col = attributes_[attr];
  return col.dictionary[col.codes[record]];
}

double RecordStore::measure_number(std::size_t measure, std::size_t record) const {
  const auto& col = measures_[measure];
  return col.numbers[col.codes[record]];
}

const std::string& RecordStore::measure_text(std::size_t measure, std::size_t record) const {
  const auto& col = measures_[measure];
  return col.dictionary[col.codes[record]];
}

// ---------------------------------------------------------------------------
// Selection and aggregation

RecordSubset select(const RecordStore& store, const CubePredicate& pred, std::string_view timestep) {
  struct Bound {
    std::size_t attr;
    std::uint32_t code;
  };
  std::vector<Bound> bound;
  bool impossible = false;
  for (const auto& b : pred.bindings()) {
    const std::size_t attr = store.attribute_index(b.attribute);
    if (b.value == kWildcard) continue;
    auto code = store.attribute_lookup(attr, b.value);
    if (!code)
      impossible = true;
    else
      bound.push_back({attr, *code});
  }
  auto ts = store.timestep_lookup(timestep);
  RecordSubset out;
  if (impossible || !ts) return out;
  for (std::size_t r = 0; r < store.size(); ++r) {
    if (store.timestep_code(r) != *ts) continue;
    bool match = true;
    for (const auto& b : bound)
      if (store.attribute_code(b.attr, r) != b.code) {
        match = false;
        break;
      }
    if (match) out.push_back(static_cast<std::uint32_t>(r));
  }
  return out;
}

void check_aggregator(const RecordStore& store, const AggregatorKind& agg) {
  if (agg.op == AggregateOp::Count && agg.column == "*") return;
  const std::size_t m = store.measure_index(agg.column);
  if (agg.op == AggregateOp::Sum && !store.measure_numeric(m))
    throw Error(Errc::TypeMismatch, "cannot sum non-numeric column '" + agg.column + "'");
}

namespace {

/// Generation-stamped marker table for exact distinct counting over dictionary codes.
class DistinctMarks {
 public:
  void reset(std::size_t cardinality) {
    if (stamps_.size() < cardinality) stamps_.resize(cardinality, 0);
    if (++generation_ == 0) {
      std::fill(stamps_.begin(), stamps_.end(), 0);
      generation_ = 1;
    }
  }
  /// True when the code had not been seen since the last reset.
  bool insert(std::uint32_t code) {
    if (stamps_[code] == generation_) return false;
    stamps_[code] = generation_;
    return true;
  }

 private:
  std::vector<std::uint32_t> stamps_;
  std::uint32_t generation_ = 0;
};

}  // namespace

double aggregate_union(const RecordStore& store, std::span<const std::span<const std::uint32_t>> parts,
                       const AggregatorKind& agg) {
  check_aggregator(store, agg);
  // count(col) counts rows whatever their nulls; the column only has to exist.
  if (agg.op == AggregateOp::Count) {
    std::size_t n = 0;
    for (auto part : parts) n += part.size();
    return static_cast<double>(n);
  }
  const std::size_t m = store.measure_index(agg.column);
  switch (agg.op) {
    case AggregateOp::Sum: {
      double total = 0.0;
      for (auto part : parts)
        for (auto r : part)
          if (store.measure_code(m, r) != RecordStore::kNull) total += store.measure_number(m, r);
      return total;
    }
    case AggregateOp::Count: break;
    case AggregateOp::CountDistinct: {
      thread_local DistinctMarks marks;
      marks.reset(store.measure_cardinality(m));
      std::size_t n = 0;
      for (auto part : parts)
        for (auto r : part) {
          const auto code = store.measure_code(m, r);
          if (code != RecordStore::kNull) n += marks.insert(code);
        }
      return static_cast<double>(n);
    }
  }
  return 0.0;
}

double aggregate_cell(const RecordStore& store, std::span<const std::uint32_t> subset, const AggregatorKind& agg) {
  const std::span<const std::uint32_t> parts[] = {subset};
  return aggregate_union(store, parts, agg);
}

ObservationMatrix build_observation_matrix(const RecordStore& store, const DrillPartition& partition,
                                           const MeasureSpec& spec, std::string_view timestep) {
  for (const auto& s : spec.submeasures()) {
    if (!s.aggregator.additive())
      throw Error(Errc::NonAdditiveAggregator, "sub-measure '" + s.name + "' uses " + s.aggregator.to_string() +
                                                   "; use the non-additive attribution path");
    check_aggregator(store, s.aggregator);
  }
  const std::size_t p = partition.children.size(), q = spec.q();
  Matrix x(p, q);
  for (std::size_t u = 0; u < p; ++u) {
    const RecordSubset rows = select(store, partition.children[u], timestep);
    for (std::size_t v = 0; v < q; ++v) x(u, v) = aggregate_cell(store, rows, spec.submeasures()[v].aggregator);
  }
  return ObservationMatrix(make_labels(partition.child_labels()), make_labels(spec.names()), std::move(x),
                           std::string(timestep));
}

DrillPartition partition_store(const RecordStore& store, const CubePredicate& parent,
                               const std::vector<std::string>& drill_dims) {
  std::map<std::string, std::set<std::string>> observed;
  for (const auto& d : drill_dims) observed[d] = store.domain(d);
  return partition(parent, drill_dims, observed);
}

AdditivityReport check_additivity(const AggregatorKind& agg) {
  AdditivityReport report;
  report.additive = agg.additive();
  if (report.additive) return report;

  // Two sub-cubes whose value sets overlap in one element.
  RecordStore::Builder b(StoreSchema{"t", {"cube"}, {agg.column}});
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"c1", "u1"}, {"c1", "u2"}, {"c2", "u2"}, {"c2", "u3"}};
  for (const auto& [cube, value] : rows) {
    const std::string attrs[] = {cube};
    const std::optional<std::string> measures[] = {value};
    b.add("t", attrs, measures);
  }
  const RecordStore store = std::move(b).build();
  AdditivityReport::Counterexample cx;
  for (const char* child : {"c1", "c2"}) {
    cx.children.push_back({});
    const auto subset = select(store, CubePredicate(std::vector<CubePredicate::Binding>{{"cube", child}}), "t");
    for (auto r : subset) cx.children.back().push_back(store.measure_text(0, r));
    cx.child_values.push_back(aggregate_cell(store, subset, agg));
  }
  cx.parent_value = aggregate_cell(store, select(store, CubePredicate::all({"cube"}), "t"), agg);
  report.counterexample = std::move(cx);
  return report;
}

}  // namespace cubeshap
