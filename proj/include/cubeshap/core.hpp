#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cubeshap {

/// Shared, immutable list of row or column labels.
using Labels = std::shared_ptr<const std::vector<std::string>>;

Labels make_labels(std::vector<std::string> names);

/// Dense row-major real matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  std::vector<double> column_sums() const;
  std::vector<double> row_sums() const;
  double total() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr const char* kWildcard = "*";

/// Ordered attribute bindings; a binding of "*" matches every value.
class CubePredicate {
 public:
  struct Binding {
    std::string attribute;
    std::string value;
    friend bool operator==(const Binding&, const Binding&) = default;
  };

  CubePredicate() = default;
  explicit CubePredicate(std::vector<Binding> bindings);

  /// Predicate over `attributes` with every attribute wildcarded.
  static CubePredicate all(const std::vector<std::string>& attributes);

  const std::vector<Binding>& bindings() const noexcept { return bindings_; }

  /// nullopt when the attribute is not mentioned.
  std::optional<std::string> value_of(const std::string& attribute) const;
  bool is_wildcard(const std::string& attribute) const;
  CubePredicate with(const std::string& attribute, const std::string& value) const;

  /// "(dc1,*)" style label.
  std::string label() const;
  /// Label restricted to the given attributes, e.g. "dc1" or "dc1|v2".
  std::string label_on(const std::vector<std::string>& attributes) const;

  friend bool operator==(const CubePredicate&, const CubePredicate&) = default;

 private:
  std::vector<Binding> bindings_;
};

struct DrillPartition {
  CubePredicate parent;
  std::vector<std::string> drill_dimensions;
  std::vector<CubePredicate> children;

  /// Child labels restricted to the drill dimensions.
  std::vector<std::string> child_labels() const;
};

/// Split `parent` into the cross product of observed values on `drill_dims`.
/// Children come out lexicographically ordered on the drilled values.
DrillPartition partition(const CubePredicate& parent, const std::vector<std::string>& drill_dims,
                         const std::map<std::string, std::set<std::string>>& observed_values);

/// p x q sub-measure values for one time step.
class ObservationMatrix {
 public:
  ObservationMatrix(Labels rows, Labels cols, Matrix values, std::string timestep = {});

  const std::vector<std::string>& rows() const noexcept { return *rows_; }
  const std::vector<std::string>& cols() const noexcept { return *cols_; }
  const Labels& row_labels() const noexcept { return rows_; }
  const Labels& col_labels() const noexcept { return cols_; }
  const Matrix& values() const noexcept { return values_; }
  const std::string& timestep() const noexcept { return timestep_; }

  std::size_t p() const noexcept { return values_.rows(); }
  std::size_t q() const noexcept { return values_.cols(); }
  double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }

 private:
  Labels rows_;
  Labels cols_;
  Matrix values_;
  std::string timestep_;
};

class ContributionMatrix {
 public:
  ContributionMatrix(Labels rows, Labels cols, Matrix values, double delta_y, std::string method);

  const std::vector<std::string>& rows() const noexcept { return *rows_; }
  const std::vector<std::string>& cols() const noexcept { return *cols_; }
  const Labels& row_labels() const noexcept { return rows_; }
  const Labels& col_labels() const noexcept { return cols_; }
  const Matrix& values() const noexcept { return values_; }
  double delta_y() const noexcept { return delta_y_; }
  /// Sum of contributions minus delta_y.
  double residual() const noexcept { return residual_; }
  const std::string& method() const noexcept { return method_; }

  double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }

 private:
  Labels rows_;
  Labels cols_;
  Matrix values_;
  double delta_y_;
  double residual_;
  std::string method_;
};

class CoalitionMask {
 public:
  CoalitionMask(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  static CoalitionMask from_flat(std::size_t rows, std::size_t cols, std::vector<unsigned char> bits);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool on) { bits_[r * cols_ + c] = on ? 1 : 0; }
  std::span<const unsigned char> flat() const noexcept { return bits_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<unsigned char> bits_;
};

enum class Axis { Rows, Cols };

/// Per-row (sub-cube) or per-column (sub-measure) totals of a contribution matrix.
std::vector<std::pair<std::string, double>> marginalize(const ContributionMatrix& c, Axis axis);

/// Aligns two observation matrices on their row labels. Rows present on only one
/// side are zero-filled on the other. Column sets must be identical; the
/// reference's columns are permuted into the explicand's order.
std::pair<ObservationMatrix, ObservationMatrix> validate_pair(const ObservationMatrix& explicand,
                                                              const ObservationMatrix& reference);

}  // namespace cubeshap
