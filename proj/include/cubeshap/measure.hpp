#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cubeshap {

enum class AggregateOp { Sum, Count, CountDistinct };

/// h_v: how a sub-measure is computed from the records of a cube.
/// `count(*)` is spelled with column "*" and counts rows.
struct AggregatorKind {
  AggregateOp op = AggregateOp::Sum;
  std::string column;

  static AggregatorKind parse(std::string_view text);
  std::string to_string() const;
  bool additive() const noexcept { return op != AggregateOp::CountDistinct; }

  friend bool operator==(const AggregatorKind&, const AggregatorKind&) = default;
};

struct SubMeasure {
  std::string name;
  AggregatorKind aggregator;

  friend bool operator==(const SubMeasure&, const SubMeasure&) = default;
};

/// Immutable arithmetic expression over sub-measure references.
/// References carry the slot (column index) they were resolved to.
class Expr {
 public:
  enum class Kind { Literal, Ref, Neg, Add, Sub, Mul, Div };

  static Expr literal(double value);
  static Expr ref(std::string name, std::size_t slot);
  static Expr neg(Expr operand);
  static Expr binary(Kind op, Expr lhs, Expr rhs);

  Kind kind() const noexcept;
  double value() const;              // Literal
  const std::string& name() const;   // Ref
  std::size_t slot() const;          // Ref
  const Expr& operand() const;       // Neg
  const Expr& lhs() const;           // binary
  const Expr& rhs() const;           // binary

  bool is_literal(double v) const noexcept;
  bool is_binary() const noexcept;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct ParsedMeasure {
  Expr expr;
  /// Declarations synthesised by avg(col) sugar: sum_col = sum(col), count_col = count(col).
  std::vector<SubMeasure> added;
};

/// Grammar: identifiers, decimal literals, + - * /, unary minus, parentheses and
/// avg(column). Slots index into `declared` followed by any avg-added names.
ParsedMeasure parse_measure(std::string_view text, const std::vector<std::string>& declared);

/// Evaluates with slot-indexed sub-measure values.
double evaluate(const Expr& expr, std::span<const double> values);
double evaluate(const Expr& expr, const std::map<std::string, double>& env);

/// Symbolic partial derivative with respect to the sub-measure in `slot`.
Expr differentiate(const Expr& expr, std::size_t slot);

/// Prints with minimal parentheses; parse(to_string(e)) reproduces e.
std::string to_string(const Expr& expr);

enum class MeasureClass { Linear, Ratio, Differentiable, Opaque };

const char* to_string(MeasureClass c) noexcept;

/// y = intercept + sum_v weights[v] * m_v.
struct AffineForm {
  double intercept = 0.0;
  std::vector<double> weights;
};

/// nullopt unless the expression is affine in every reference.
std::optional<AffineForm> affine_form(const Expr& expr, std::size_t slots);

/// A derived measure f(m_1..m_q) with its ordered sub-measure declarations.
class MeasureSpec {
 public:
  using OpaqueFn = std::function<double(std::span<const double>)>;

  /// Parses `expression` over `submeasures`; avg() sugar appends declarations.
  static MeasureSpec parse(std::string_view expression, std::vector<SubMeasure> submeasures);
  /// A black-box f; only the coalition-game engines accept it.
  static MeasureSpec opaque(OpaqueFn fn, std::vector<SubMeasure> submeasures, std::string label = "opaque");

  const std::vector<SubMeasure>& submeasures() const noexcept { return submeasures_; }
  std::vector<std::string> names() const;
  std::size_t q() const noexcept { return submeasures_.size(); }
  MeasureClass measure_class() const noexcept { return class_; }
  bool all_additive() const noexcept;

  /// nullptr for opaque measures.
  const Expr* expr() const noexcept { return expr_ ? &*expr_ : nullptr; }
  const std::string& text() const noexcept { return text_; }

  double evaluate(std::span<const double> values) const;

  /// dy/dm_v as an expression; throws EngineMismatch for opaque measures.
  const Expr& partial(std::size_t v) const;
  /// (numerator slot, denominator slot) of a ratio measure.
  std::pair<std::size_t, std::size_t> ratio_slots() const;
  /// Intercept and weights of a linear measure.
  const AffineForm& affine() const;

 private:
  MeasureSpec() = default;

  std::vector<SubMeasure> submeasures_;
  std::optional<Expr> expr_;
  std::vector<Expr> partials_;
  std::optional<AffineForm> affine_;
  OpaqueFn opaque_;
  std::string text_;
  MeasureClass class_ = MeasureClass::Opaque;
};

/// Structural routing class: linear iff affine, ratio iff Ref / Ref, else differentiable.
MeasureClass classify(const MeasureSpec& spec);

}  // namespace cubeshap
