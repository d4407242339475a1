#include "cubeshap/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "cubeshap/error.hpp"

namespace cubeshap {

Labels make_labels(std::vector<std::string> names) {
  return std::make_shared<const std::vector<std::string>>(std::move(names));
}

std::vector<double> Matrix::column_sums() const {
  std::vector<double> sums(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) sums[c] += (*this)(r, c);
  return sums;
}

std::vector<double> Matrix::row_sums() const {
  std::vector<double> sums(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) sums[r] += (*this)(r, c);
  return sums;
}

double Matrix::total() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

// ---------------------------------------------------------------------------

CubePredicate::CubePredicate(std::vector<Binding> bindings) : bindings_(std::move(bindings)) {
  for (std::size_t i = 0; i < bindings_.size(); ++i)
    for (std::size_t j = i + 1; j < bindings_.size(); ++j)
      if (bindings_[i].attribute == bindings_[j].attribute)
        throw Error(Errc::InvalidArgument, "attribute '" + bindings_[i].attribute +
                                               "' bound twice in predicate");
}

CubePredicate CubePredicate::all(const std::vector<std::string>& attributes) {
  std::vector<Binding> b;
  b.reserve(attributes.size());
  for (const auto& a : attributes) b.push_back({a, kWildcard});
  return CubePredicate(std::move(b));
}

std::optional<std::string> CubePredicate::value_of(const std::string& attribute) const {
  for (const auto& b : bindings_)
    if (b.attribute == attribute) return b.value;
  return std::nullopt;
}

bool CubePredicate::is_wildcard(const std::string& attribute) const {
  auto v = value_of(attribute);
  return !v || *v == kWildcard;
}

CubePredicate CubePredicate::with(const std::string& attribute, const std::string& value) const {
  auto b = bindings_;
  auto it = std::find_if(b.begin(), b.end(), [&](const Binding& x) { return x.attribute == attribute; });
  if (it == b.end())
    b.push_back({attribute, value});
  else
    it->value = value;
  return CubePredicate(std::move(b));
}

std::string CubePredicate::label() const {
  std::string out = "(";
  for (std::size_t i = 0; i < bindings_.size(); ++i) {
    if (i) out += ",";
    out += bindings_[i].value;
  }
  return out + ")";
}

std::string CubePredicate::label_on(const std::vector<std::string>& attributes) const {
  std::string out;
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (i) out += "|";
    out += value_of(attributes[i]).value_or(kWildcard);
  }
  return out;
}

std::vector<std::string> DrillPartition::child_labels() const {
  std::vector<std::string> out;
  out.reserve(children.size());
  for (const auto& c : children) out.push_back(c.label_on(drill_dimensions));
  return out;
}

DrillPartition partition(const CubePredicate& parent, const std::vector<std::string>& drill_dims,
                         const std::map<std::string, std::set<std::string>>& observed_values) {
  if (drill_dims.empty()) throw Error(Errc::InvalidArgument, "no drill dimensions given");
  for (std::size_t i = 0; i < drill_dims.size(); ++i) {
    for (std::size_t j = i + 1; j < drill_dims.size(); ++j)
      if (drill_dims[i] == drill_dims[j])
        throw Error(Errc::InvalidArgument, "duplicate drill dimension '" + drill_dims[i] + "'");
    if (!parent.is_wildcard(drill_dims[i]))
      throw Error(Errc::NonWildcardDrill, "drill dimension '" + drill_dims[i] +
                                              "' is already bound in " + parent.label());
  }

  std::vector<const std::set<std::string>*> domains;
  for (const auto& d : drill_dims) {
    auto it = observed_values.find(d);
    if (it == observed_values.end() || it->second.empty())
      throw Error(Errc::EmptyDomain, "no observed values for attribute '" + d + "'");
    domains.push_back(&it->second);
  }

  DrillPartition out{parent, drill_dims, {}};
  // Odometer over the sorted domains; the last dimension varies fastest.
  std::vector<std::set<std::string>::const_iterator> cursor;
  for (auto* d : domains) cursor.push_back(d->begin());
  for (;;) {
    CubePredicate child = parent;
    for (std::size_t i = 0; i < drill_dims.size(); ++i) child = child.with(drill_dims[i], *cursor[i]);
    out.children.push_back(std::move(child));

    std::size_t k = drill_dims.size();
    while (k > 0) {
      --k;
      if (++cursor[k] != domains[k]->end()) break;
      cursor[k] = domains[k]->begin();
      if (k == 0) return out;
    }
  }
}

// ---------------------------------------------------------------------------

ObservationMatrix::ObservationMatrix(Labels rows, Labels cols, Matrix values, std::string timestep)
    : rows_(std::move(rows)), cols_(std::move(cols)), values_(std::move(values)),
      timestep_(std::move(timestep)) {
  if (!rows_ || !cols_ || rows_->size() != values_.rows() || cols_->size() != values_.cols())
    throw Error(Errc::ShapeMismatch, "observation labels do not match a " +
                                         std::to_string(values_.rows()) + "x" +
                                         std::to_string(values_.cols()) + " matrix");
  for (double v : values_.flat())
    if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "non-finite observation value");
}

ContributionMatrix::ContributionMatrix(Labels rows, Labels cols, Matrix values, double delta_y,
                                       std::string method)
    : rows_(std::move(rows)), cols_(std::move(cols)), values_(std::move(values)),
      delta_y_(delta_y), method_(std::move(method)) {
  if (!rows_ || !cols_ || rows_->size() != values_.rows() || cols_->size() != values_.cols())
    throw Error(Errc::ShapeMismatch, "contribution labels do not match matrix shape");
  residual_ = values_.total() - delta_y_;
}

CoalitionMask CoalitionMask::from_flat(std::size_t rows, std::size_t cols,
                                       std::vector<unsigned char> bits) {
  if (bits.size() != rows * cols) throw Error(Errc::ShapeMismatch, "mask size mismatch");
  CoalitionMask m(rows, cols);
  m.bits_ = std::move(bits);
  return m;
}

std::vector<std::pair<std::string, double>> marginalize(const ContributionMatrix& c, Axis axis) {
  const auto sums = axis == Axis::Rows ? c.values().row_sums() : c.values().column_sums();
  const auto& labels = axis == Axis::Rows ? c.rows() : c.cols();
  std::vector<std::pair<std::string, double>> out;
  out.reserve(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) out.emplace_back(labels[i], sums[i]);
  return out;
}

std::pair<ObservationMatrix, ObservationMatrix> validate_pair(const ObservationMatrix& explicand,
                                                              const ObservationMatrix& reference) {
  const auto& tc = explicand.cols();
  const auto& rc = reference.cols();
  std::vector<std::size_t> col_map(tc.size());
  {
    auto sorted_t = tc, sorted_r = rc;
    std::sort(sorted_t.begin(), sorted_t.end());
    std::sort(sorted_r.begin(), sorted_r.end());
    if (sorted_t != sorted_r || std::adjacent_find(sorted_t.begin(), sorted_t.end()) != sorted_t.end())
      throw Error(Errc::ColumnMismatch, "explicand and reference sub-measure sets differ");
    for (std::size_t c = 0; c < tc.size(); ++c)
      col_map[c] = static_cast<std::size_t>(std::find(rc.begin(), rc.end(), tc[c]) - rc.begin());
  }

  if (explicand.rows() == reference.rows() && tc == rc) return {explicand, reference};

  std::vector<std::string> rows = explicand.rows();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < rows.size(); ++i) index.emplace(rows[i], i);
  for (const auto& r : reference.rows())
    if (index.emplace(r, rows.size()).second) rows.push_back(r);

  const std::size_t p = rows.size(), q = tc.size();
  Matrix xt(p, q), xr(p, q);
  for (std::size_t i = 0; i < explicand.p(); ++i)
    for (std::size_t c = 0; c < q; ++c) xt(i, c) = explicand(i, c);
  for (std::size_t i = 0; i < reference.p(); ++i) {
    const std::size_t u = index.at(reference.rows()[i]);
    for (std::size_t c = 0; c < q; ++c) xr(u, c) = reference(i, col_map[c]);
  }
  auto row_labels = make_labels(std::move(rows));
  return {ObservationMatrix(row_labels, explicand.col_labels(), std::move(xt), explicand.timestep()),
          ObservationMatrix(row_labels, explicand.col_labels(), std::move(xr), reference.timestep())};
}

}  // namespace cubeshap
