#include "cubeshap/measure.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "cubeshap/error.hpp"

namespace cubeshap {

// ---------------------------------------------------------------------------
// Aggregator

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

AggregatorKind AggregatorKind::parse(std::string_view text) {
  const auto s = trim(text);
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')')
    throw Error(Errc::InvalidConfig, "aggregator must look like op(column): '" + std::string(s) + "'");
  const auto op = trim(s.substr(0, open));
  const auto column = trim(s.substr(open + 1, s.size() - open - 2));
  if (column.empty()) throw Error(Errc::InvalidConfig, "aggregator has no column: '" + std::string(s) + "'");

  AggregatorKind out;
  out.column = std::string(column);
  if (op == "sum")
    out.op = AggregateOp::Sum;
  else if (op == "count")
    out.op = AggregateOp::Count;
  else if (op == "count_distinct")
    out.op = AggregateOp::CountDistinct;
  else
    throw Error(Errc::InvalidConfig, "unknown aggregator '" + std::string(op) + "'");
  if (out.column == "*" && out.op != AggregateOp::Count)
    throw Error(Errc::InvalidConfig, "only count accepts '*'");
  return out;
}

std::string AggregatorKind::to_string() const {
  switch (op) {
    case AggregateOp::Sum: return "sum(" + column + ")";
    case AggregateOp::Count: return "count(" + column + ")";
    case AggregateOp::CountDistinct: return "count_distinct(" + column + ")";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Expression tree

struct Expr::Node {
  Kind kind;
  double value = 0.0;
  std::string name;
  std::size_t slot = 0;
  std::optional<Expr> a;
  std::optional<Expr> b;
};

Expr Expr::literal(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Literal;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::ref(std::string name, std::size_t slot) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Ref;
  n->name = std::move(name);
  n->slot = slot;
  return Expr(std::move(n));
}

Expr Expr::neg(Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Neg;
  n->a = std::move(operand);
  return Expr(std::move(n));
}

Expr Expr::binary(Kind op, Expr lhs, Expr rhs) {
  if (op != Kind::Add && op != Kind::Sub && op != Kind::Mul && op != Kind::Div)
    throw Error(Errc::InvalidArgument, "not a binary operator");
  auto n = std::make_shared<Node>();
  n->kind = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const noexcept { return node_->kind; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
std::size_t Expr::slot() const { return node_->slot; }
const Expr& Expr::operand() const { return *node_->a; }
const Expr& Expr::lhs() const { return *node_->a; }
const Expr& Expr::rhs() const { return *node_->b; }

bool Expr::is_literal(double v) const noexcept { return node_->kind == Kind::Literal && node_->value == v; }

bool Expr::is_binary() const noexcept {
  return node_->kind != Kind::Literal && node_->kind != Kind::Ref && node_->kind != Kind::Neg;
}

bool operator==(const Expr& x, const Expr& y) {
  if (x.node_ == y.node_) return true;
  if (x.kind() != y.kind()) return false;
  switch (x.kind()) {
    case Expr::Kind::Literal: return x.value() == y.value();
    case Expr::Kind::Ref: return x.name() == y.name() && x.slot() == y.slot();
    case Expr::Kind::Neg: return x.operand() == y.operand();
    default: return x.lhs() == y.lhs() && x.rhs() == y.rhs();
  }
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& declared)
      : text_(text), names_(declared) {}

  ParsedMeasure run() {
    skip_space();
    if (pos_ == text_.size()) throw SyntaxError(pos_, "empty expression");
    Expr e = parse_sum();
    skip_space();
    if (pos_ != text_.size()) throw SyntaxError(pos_, "unexpected '" + std::string(1, text_[pos_]) + "'");
    return {std::move(e), std::move(added_)};
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool at_number() {
    skip_space();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
    return c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]));
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (eat('+'))
        lhs = Expr::binary(Expr::Kind::Add, std::move(lhs), parse_product());
      else if (eat('-'))
        lhs = Expr::binary(Expr::Kind::Sub, std::move(lhs), parse_product());
      else
        return lhs;
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (eat('*'))
        lhs = Expr::binary(Expr::Kind::Mul, std::move(lhs), parse_unary());
      else if (eat('/'))
        lhs = Expr::binary(Expr::Kind::Div, std::move(lhs), parse_unary());
      else
        return lhs;
    }
  }

  Expr parse_unary() {
    if (eat('-')) {
      // A minus directly applied to a numeric literal folds into the literal.
      if (at_number()) return Expr::literal(-parse_number());
      return Expr::neg(parse_unary());
    }
    return parse_primary();
  }

  double parse_number() {
    skip_space();
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        digits();
      else
        pos_ = save;
    }
    const std::string token(text_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v))
      throw SyntaxError(start, "malformed number '" + token + "'");
    return v;
  }

  std::string parse_identifier() {
    skip_space();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() ||
        !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      throw SyntaxError(pos_, pos_ < text_.size() ? "unexpected '" + std::string(1, text_[pos_]) + "'"
                                                  : "unexpected end of expression");
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::size_t slot_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    return it == names_.end() ? names_.size() : static_cast<std::size_t>(it - names_.begin());
  }

  std::size_t ensure(const std::string& name, AggregatorKind agg) {
    std::size_t s = slot_of(name);
    if (s == names_.size()) {
      names_.push_back(name);
      added_.push_back({name, std::move(agg)});
    }
    return s;
  }

  Expr parse_primary() {
    if (at_number()) return Expr::literal(parse_number());
    if (eat('(')) {
      Expr inner = parse_sum();
      if (!eat(')')) throw SyntaxError(pos_, "expected ')'");
      return inner;
    }
    const std::size_t start = (skip_space(), pos_);
    std::string id = parse_identifier();
    if (eat('(')) {
      if (id != "avg") throw SyntaxError(start, "unknown function '" + id + "'");
      const std::string column = parse_identifier();
      if (!eat(')')) throw SyntaxError(pos_, "expected ')'");
      const std::string sum_name = "sum_" + column, count_name = "count_" + column;
      const std::size_t s = ensure(sum_name, {AggregateOp::Sum, column});
      const std::size_t c = ensure(count_name, {AggregateOp::Count, column});
      return Expr::binary(Expr::Kind::Div, Expr::ref(sum_name, s), Expr::ref(count_name, c));
    }
    const std::size_t s = slot_of(id);
    if (s == names_.size()) throw Error(Errc::UnknownSubMeasure, "'" + id + "' is not a declared sub-measure");
    return Expr::ref(std::move(id), s);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::string> names_;
  std::vector<SubMeasure> added_;
};

}  // namespace

ParsedMeasure parse_measure(std::string_view text, const std::vector<std::string>& declared) {
  return Parser(text, declared).run();
}

// ---------------------------------------------------------------------------
// Evaluation

double evaluate(const Expr& e, std::span<const double> values) {
  switch (e.kind()) {
    case Expr::Kind::Literal: return e.value();
    case Expr::Kind::Ref:
      if (e.slot() >= values.size())
        throw Error(Errc::UnknownSubMeasure, "no value bound for '" + e.name() + "'");
      return values[e.slot()];
    case Expr::Kind::Neg: return -evaluate(e.operand(), values);
    case Expr::Kind::Add: return evaluate(e.lhs(), values) + evaluate(e.rhs(), values);
    case Expr::Kind::Sub: return evaluate(e.lhs(), values) - evaluate(e.rhs(), values);
    case Expr::Kind::Mul: return evaluate(e.lhs(), values) * evaluate(e.rhs(), values);
    case Expr::Kind::Div: {
      const double num = evaluate(e.lhs(), values);
      const double den = evaluate(e.rhs(), values);
      if (den == 0.0) throw Error(Errc::DivisionByZero, "denominator '" + to_string(e.rhs()) + "' is zero");
      return num / den;
    }
  }
  return 0.0;
}

namespace {

void collect_refs(const Expr& e, std::vector<std::pair<std::string, std::size_t>>& out) {
  switch (e.kind()) {
    case Expr::Kind::Literal: return;
    case Expr::Kind::Ref: out.emplace_back(e.name(), e.slot()); return;
    case Expr::Kind::Neg: collect_refs(e.operand(), out); return;
    default:
      collect_refs(e.lhs(), out);
      collect_refs(e.rhs(), out);
  }
}

}  // namespace

double evaluate(const Expr& expr, const std::map<std::string, double>& env) {
  std::vector<std::pair<std::string, std::size_t>> refs;
  collect_refs(expr, refs);
  std::size_t slots = 0;
  for (const auto& r : refs) slots = std::max(slots, r.second + 1);
  std::vector<double> values(slots, 0.0);
  for (const auto& [name, slot] : refs) {
    auto it = env.find(name);
    if (it == env.end()) throw Error(Errc::UnknownSubMeasure, "no value bound for '" + name + "'");
    values[slot] = it->second;
  }
  return evaluate(expr, values);
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

bool is_lit(const Expr& e) { return e.kind() == Expr::Kind::Literal; }

Expr make_neg(Expr a) {
  if (is_lit(a)) return Expr::literal(-a.value());
  return Expr::neg(std::move(a));
}

Expr make_add(Expr a, Expr b) {
  if (is_lit(a) && is_lit(b)) return Expr::literal(a.value() + b.value());
  if (a.is_literal(0.0)) return b;
  if (b.is_literal(0.0)) return a;
  return Expr::binary(Expr::Kind::Add, std::move(a), std::move(b));
}

Expr make_sub(Expr a, Expr b) {
  if (is_lit(a) && is_lit(b)) return Expr::literal(a.value() - b.value());
  if (b.is_literal(0.0)) return a;
  if (a.is_literal(0.0)) return make_neg(std::move(b));
  return Expr::binary(Expr::Kind::Sub, std::move(a), std::move(b));
}

Expr make_mul(Expr a, Expr b) {
  if (is_lit(a) && is_lit(b)) return Expr::literal(a.value() * b.value());
  if (a.is_literal(0.0) || b.is_literal(0.0)) return Expr::literal(0.0);
  if (a.is_literal(1.0)) return b;
  if (b.is_literal(1.0)) return a;
  return Expr::binary(Expr::Kind::Mul, std::move(a), std::move(b));
}

Expr make_div(Expr a, Expr b) {
  if (is_lit(a) && is_lit(b) && b.value() != 0.0) return Expr::literal(a.value() / b.value());
  if (a.is_literal(0.0)) return Expr::literal(0.0);
  if (b.is_literal(1.0)) return a;
  return Expr::binary(Expr::Kind::Div, std::move(a), std::move(b));
}

}  // namespace

Expr differentiate(const Expr& e, std::size_t slot) {
  switch (e.kind()) {
    case Expr::Kind::Literal: return Expr::literal(0.0);
    case Expr::Kind::Ref: return Expr::literal(e.slot() == slot ? 1.0 : 0.0);
    case Expr::Kind::Neg: return make_neg(differentiate(e.operand(), slot));
    case Expr::Kind::Add: return make_add(differentiate(e.lhs(), slot), differentiate(e.rhs(), slot));
    case Expr::Kind::Sub: return make_sub(differentiate(e.lhs(), slot), differentiate(e.rhs(), slot));
    case Expr::Kind::Mul:
      return make_add(make_mul(differentiate(e.lhs(), slot), e.rhs()),
                      make_mul(e.lhs(), differentiate(e.rhs(), slot)));
    case Expr::Kind::Div: {
      Expr da = differentiate(e.lhs(), slot);
      Expr db = differentiate(e.rhs(), slot);
      if (db.is_literal(0.0)) return make_div(std::move(da), e.rhs());
      Expr denom = make_mul(e.rhs(), e.rhs());
      if (da.is_literal(0.0)) return make_div(make_neg(make_mul(e.lhs(), std::move(db))), std::move(denom));
      return make_div(make_sub(make_mul(std::move(da), e.rhs()), make_mul(e.lhs(), std::move(db))),
                      std::move(denom));
    }
  }
  return Expr::literal(0.0);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div: return 2;
    default: return 3;
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that still round-trips.
  for (int digits = 1; digits < 17; ++digits) {
    char shortbuf[32];
    std::snprintf(shortbuf, sizeof shortbuf, "%.*g", digits, v);
    if (std::strtod(shortbuf, nullptr) == v) return shortbuf;
  }
  return buf;
}

void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::Literal: out += format_number(e.value()); return;
    case Expr::Kind::Ref: out += e.name(); return;
    case Expr::Kind::Neg: {
      const Expr& a = e.operand();
      out += '-';
      const bool wrap = a.kind() == Expr::Kind::Literal || a.is_binary();
      if (wrap) out += '(';
      print(a, out);
      if (wrap) out += ')';
      return;
    }
    default: {
      const int p = precedence(e);
      const bool wrap_l = precedence(e.lhs()) < p;
      const bool wrap_r = precedence(e.rhs()) <= p;
      if (wrap_l) out += '(';
      print(e.lhs(), out);
      if (wrap_l) out += ')';
      switch (e.kind()) {
        case Expr::Kind::Add: out += " + "; break;
        case Expr::Kind::Sub: out += " - "; break;
        case Expr::Kind::Mul: out += " * "; break;
        default: out += " / "; break;
      }
      if (wrap_r) out += '(';
      print(e.rhs(), out);
      if (wrap_r) out += ')';
    }
  }
}

}  // namespace

std::string to_string(const Expr& expr) {
  std::string out;
  print(expr, out);
  return out;
}

const char* to_string(MeasureClass c) noexcept {
  switch (c) {
    case MeasureClass::Linear: return "linear";
    case MeasureClass::Ratio: return "ratio";
    case MeasureClass::Differentiable: return "differentiable";
    case MeasureClass::Opaque: return "opaque";
  }
  return "opaque";
}

// ---------------------------------------------------------------------------
// Structure

std::optional<AffineForm> affine_form(const Expr& e, std::size_t slots) {
  switch (e.kind()) {
    case Expr::Kind::Literal: return AffineForm{e.value(), std::vector<double>(slots, 0.0)};
    case Expr::Kind::Ref: {
      if (e.slot() >= slots) return std::nullopt;
      AffineForm f{0.0, std::vector<double>(slots, 0.0)};
      f.weights[e.slot()] = 1.0;
      return f;
    }
    case Expr::Kind::Neg: {
      auto f = affine_form(e.operand(), slots);
      if (!f) return std::nullopt;
      f->intercept = -f->intercept;
      for (auto& w : f->weights) w = -w;
      return f;
    }
    case Expr::Kind::Add:
    case Expr::Kind::Sub: {
      auto a = affine_form(e.lhs(), slots);
      auto b = affine_form(e.rhs(), slots);
      if (!a || !b) return std::nullopt;
      const double sign = e.kind() == Expr::Kind::Add ? 1.0 : -1.0;
      a->intercept += sign * b->intercept;
      for (std::size_t i = 0; i < slots; ++i) a->weights[i] += sign * b->weights[i];
      return a;
    }
    case Expr::Kind::Mul:
    case Expr::Kind::Div: {
      auto a = affine_form(e.lhs(), slots);
      auto b = affine_form(e.rhs(), slots);
      if (!a || !b) return std::nullopt;
      auto constant = [](const AffineForm& f) {
        return std::all_of(f.weights.begin(), f.weights.end(), [](double w) { return w == 0.0; });
      };
      if (e.kind() == Expr::Kind::Div) {
        if (!constant(*b) || b->intercept == 0.0) return std::nullopt;
        const double k = 1.0 / b->intercept;
        a->intercept *= k;
        for (auto& w : a->weights) w *= k;
        return a;
      }
      if (constant(*a)) std::swap(a, b);
      if (!constant(*b)) return std::nullopt;
      a->intercept *= b->intercept;
      for (auto& w : a->weights) w *= b->intercept;
      return a;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// MeasureSpec

MeasureSpec MeasureSpec::parse(std::string_view expression, std::vector<SubMeasure> submeasures) {
  std::vector<std::string> names;
  for (const auto& s : submeasures) {
    if (std::find(names.begin(), names.end(), s.name) != names.end())
      throw Error(Errc::InvalidConfig, "sub-measure '" + s.name + "' declared twice");
    names.push_back(s.name);
  }
  ParsedMeasure parsed = parse_measure(expression, names);

  MeasureSpec spec;
  spec.submeasures_ = std::move(submeasures);
  for (auto& a : parsed.added) spec.submeasures_.push_back(std::move(a));
  spec.expr_ = std::move(parsed.expr);
  spec.text_ = to_string(*spec.expr_);
  for (std::size_t v = 0; v < spec.submeasures_.size(); ++v)
    spec.partials_.push_back(differentiate(*spec.expr_, v));
  spec.affine_ = affine_form(*spec.expr_, spec.submeasures_.size());
  spec.class_ = classify(spec);
  return spec;
}

MeasureSpec MeasureSpec::opaque(OpaqueFn fn, std::vector<SubMeasure> submeasures, std::string label) {
  if (!fn) throw Error(Errc::InvalidArgument, "opaque measure needs a callable");
  MeasureSpec spec;
  spec.submeasures_ = std::move(submeasures);
  spec.opaque_ = std::move(fn);
  spec.text_ = std::move(label);
  spec.class_ = MeasureClass::Opaque;
  return spec;
}

std::vector<std::string> MeasureSpec::names() const {
  std::vector<std::string> out;
  out.reserve(submeasures_.size());
  for (const auto& s : submeasures_) out.push_back(s.name);
  return out;
}

bool MeasureSpec::all_additive() const noexcept {
  return std::all_of(submeasures_.begin(), submeasures_.end(),
                     [](const SubMeasure& s) { return s.aggregator.additive(); });
}

double MeasureSpec::evaluate(std::span<const double> values) const {
  if (expr_) return cubeshap::evaluate(*expr_, values);
  return opaque_(values);
}

const Expr& MeasureSpec::partial(std::size_t v) const {
  if (!expr_) throw Error(Errc::EngineMismatch, "opaque measures have no symbolic gradient");
  return partials_.at(v);
}

std::pair<std::size_t, std::size_t> MeasureSpec::ratio_slots() const {
  if (class_ != MeasureClass::Ratio) throw Error(Errc::EngineMismatch, "measure is not a ratio of two sub-measures");
  return {expr_->lhs().slot(), expr_->rhs().slot()};
}

const AffineForm& MeasureSpec::affine() const {
  if (!affine_) throw Error(Errc::EngineMismatch, "measure is not linear");
  return *affine_;
}

MeasureClass classify(const MeasureSpec& spec) {
  const Expr* e = spec.expr();
  if (!e) return MeasureClass::Opaque;
  if (affine_form(*e, spec.q())) return MeasureClass::Linear;
  if (e->kind() == Expr::Kind::Div && e->lhs().kind() == Expr::Kind::Ref &&
      e->rhs().kind() == Expr::Kind::Ref && e->lhs().slot() != e->rhs().slot())
    return MeasureClass::Ratio;
  return MeasureClass::Differentiable;
}

}  // namespace cubeshap
