#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cubeshap/core.hpp"
#include "cubeshap/measure.hpp"

namespace cubeshap {

struct StoreSchema {
  std::string timestep;
  std::vector<std::string> attributes;
  std::vector<std::string> measures;
};

/// Indices of records inside a RecordStore.
using RecordSubset = std::vector<std::uint32_t>;

/// Immutable, dictionary-encoded transactional records.
class RecordStore {
 public:
  static constexpr std::uint32_t kNull = UINT32_MAX;

  class Builder;

  /// Header row required; empty measure cells are null. NoRecords when no data rows follow.
  static RecordStore from_csv(std::istream& in, const StoreSchema& schema);
  static RecordStore from_csv(const std::filesystem::path& path, const StoreSchema& schema);

  const StoreSchema& schema() const noexcept { return schema_; }
  std::size_t size() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_ == 0; }

  /// Distinct values observed for an attribute across every time step.
  std::set<std::string> domain(const std::string& attribute) const;
  std::set<std::string> timesteps() const;

  std::size_t attribute_index(const std::string& name) const;  // UnknownAttribute
  std::size_t measure_index(const std::string& name) const;    // UnknownColumn

  std::uint32_t timestep_code(std::size_t record) const { return timestep_.codes[record]; }
  std::optional<std::uint32_t> timestep_lookup(std::string_view label) const;
  std::uint32_t attribute_code(std::size_t attr, std::size_t record) const { return attributes_[attr].codes[record]; }
  std::optional<std::uint32_t> attribute_lookup(std::size_t attr, std::string_view value) const;
  const std::string& attribute_value(std::size_t attr, std::size_t record) const;

  /// Dictionary code of a measure cell, kNull when null.
  std::uint32_t measure_code(std::size_t measure, std::size_t record) const { return measures_[measure].codes[record]; }
  std::size_t measure_cardinality(std::size_t measure) const { return measures_[measure].dictionary.size(); }
  bool measure_numeric(std::size_t measure) const { return measures_[measure].numeric; }
  /// Numeric value of a non-null cell in a numeric column.
  double measure_number(std::size_t measure, std::size_t record) const;
  const std::string& measure_text(std::size_t measure, std::size_t record) const;

 private:
  friend class Builder;
  RecordStore() = default;

  struct Column {
    std::vector<std::uint32_t> codes;
    std::vector<std::string> dictionary;
    std::map<std::string, std::uint32_t, std::less<>> lookup;

    std::uint32_t intern(std::string_view value);
    std::optional<std::uint32_t> find(std::string_view value) const;
  };
  struct MeasureColumn : Column {
    bool numeric = true;
    std::vector<double> numbers;  // per dictionary entry
  };

  StoreSchema schema_;
  Column timestep_;
  std::vector<Column> attributes_;
  std::vector<MeasureColumn> measures_;
  std::size_t rows_ = 0;
};

/// Row-at-a-time construction of a RecordStore.
class RecordStore::Builder {
 public:
  explicit Builder(StoreSchema schema);

  /// `attributes` and `measures` follow the schema order; nullopt is a null measure.
  Builder& add(std::string_view timestep, std::span<const std::string> attributes,
               std::span<const std::optional<std::string>> measures);
  RecordStore build() &&;

 private:
  RecordStore store_;
};

/// Records matching every non-wildcard binding of `pred` at `timestep`.
RecordSubset select(const RecordStore& store, const CubePredicate& pred, std::string_view timestep);

/// sum skips nulls; count counts rows, nulls included; count_distinct counts
/// distinct non-null values.
double aggregate_cell(const RecordStore& store, std::span<const std::uint32_t> subset, const AggregatorKind& agg);

/// Aggregate over the union of pairwise disjoint subsets without materialising it.
double aggregate_union(const RecordStore& store, std::span<const std::span<const std::uint32_t>> parts,
                       const AggregatorKind& agg);

/// Resolves the aggregator's column; validates sum against non-numeric columns.
void check_aggregator(const RecordStore& store, const AggregatorKind& agg);

/// x_uv = h_v(records of child u at `timestep`). Additive aggregators only.
ObservationMatrix build_observation_matrix(const RecordStore& store, const DrillPartition& partition,
                                           const MeasureSpec& spec, std::string_view timestep);

/// Drill `parent` along `drill_dims` using the values present in the store.
DrillPartition partition_store(const RecordStore& store, const CubePredicate& parent,
                               const std::vector<std::string>& drill_dims);

struct AdditivityReport {
  bool additive = true;
  /// Set when not additive: a parent whose value differs from the sum over two children.
  struct Counterexample {
    std::vector<std::vector<std::string>> children;
    std::vector<double> child_values;
    double parent_value = 0.0;
  };
  std::optional<Counterexample> counterexample;
};

AdditivityReport check_additivity(const AggregatorKind& agg);

}  // namespace cubeshap
