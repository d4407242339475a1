#include <doctest.h>

#include <cmath>
#include <random>

#include "cubeshap/error.hpp"
#include "cubeshap/measure.hpp"

using namespace cubeshap;
using K = Expr::Kind;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::Io;
}

const std::vector<std::string> kNames{"a", "b", "c", "d"};

Expr ref(std::size_t slot) { return Expr::ref(kNames[slot], slot); }

/// Random tree whose values stay positive on [1, 10]^4: safe as a denominator.
Expr positive_tree(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 3 : 1);
  switch (pick(rng)) {
    case 0: return ref(rng() % kNames.size());
    case 1: return Expr::literal(1.0 + static_cast<double>(rng() % 9));
    case 2: return Expr::binary(K::Add, positive_tree(rng, depth - 1), positive_tree(rng, depth - 1));
    default: return Expr::binary(K::Mul, positive_tree(rng, depth - 1), positive_tree(rng, depth - 1));
  }
}

/// Random differentiable tree; divisions only by positive subtrees.
Expr random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 6 : 1);
  switch (pick(rng)) {
    case 0: return ref(rng() % kNames.size());
    case 1: return Expr::literal(static_cast<double>(static_cast<int>(rng() % 11) - 5) / 2.0);
    case 2: return Expr::neg(random_tree(rng, depth - 1));
    case 3: return Expr::binary(K::Add, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 4: return Expr::binary(K::Sub, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 5: return Expr::binary(K::Mul, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    default: return Expr::binary(K::Div, random_tree(rng, depth - 1), positive_tree(rng, depth - 1));
  }
}

}  // namespace

TEST_CASE("parse a ratio") {
  const auto parsed = parse_measure("succ_cnt / total_cnt", {"succ_cnt", "total_cnt"});
  CHECK(parsed.expr == Expr::binary(K::Div, Expr::ref("succ_cnt", 0), Expr::ref("total_cnt", 1)));
  CHECK(parsed.added.empty());
}

TEST_CASE("parse a bare reference and a scaled difference") {
  CHECK(parse_measure("m1", {"m1"}).expr == Expr::ref("m1", 0));
  CHECK(parse_measure("2*(a-b)", {"a", "b"}).expr ==
        Expr::binary(K::Mul, Expr::literal(2), Expr::binary(K::Sub, Expr::ref("a", 0), Expr::ref("b", 1))));
}

TEST_CASE("precedence and associativity") {
  const std::vector<std::string> d{"a", "b", "c"};
  const auto a = Expr::ref("a", 0), b = Expr::ref("b", 1), c = Expr::ref("c", 2);
  CHECK(parse_measure("a - b - c", d).expr == Expr::binary(K::Sub, Expr::binary(K::Sub, a, b), c));
  CHECK(parse_measure("a / b / c", d).expr == Expr::binary(K::Div, Expr::binary(K::Div, a, b), c));
  CHECK(parse_measure("a + b * c", d).expr == Expr::binary(K::Add, a, Expr::binary(K::Mul, b, c)));
  CHECK(parse_measure("-a * b", d).expr == Expr::binary(K::Mul, Expr::neg(a), b));
  CHECK(parse_measure("1.5e2 * a", d).expr == Expr::binary(K::Mul, Expr::literal(150), a));
}

TEST_CASE("parse errors") {
  CHECK(code_of([] { parse_measure("a +", {"a"}); }) == Errc::SyntaxError);
  CHECK(code_of([] { parse_measure("(a", {"a"}); }) == Errc::SyntaxError);
  CHECK(code_of([] { parse_measure("", {"a"}); }) == Errc::SyntaxError);
  CHECK(code_of([] { parse_measure("sqrt(a)", {"a"}); }) == Errc::SyntaxError);
  CHECK(code_of([] { parse_measure("a + zz", {"a"}); }) == Errc::UnknownSubMeasure);
  try {
    parse_measure("a + $", {"a"});
    FAIL("no error");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("avg sugar adds sum and count declarations") {
  const auto parsed = parse_measure("avg(delay)", {});
  REQUIRE(parsed.added.size() == 2);
  CHECK(parsed.added[0].name == "sum_delay");
  CHECK(parsed.added[0].aggregator == AggregatorKind{AggregateOp::Sum, "delay"});
  CHECK(parsed.added[1].name == "count_delay");
  CHECK(parsed.added[1].aggregator == AggregatorKind{AggregateOp::Count, "delay"});
  CHECK(parsed.expr == Expr::binary(K::Div, Expr::ref("sum_delay", 0), Expr::ref("count_delay", 1)));

  const auto spec = MeasureSpec::parse("avg(delay)", {});
  CHECK(spec.names() == std::vector<std::string>{"sum_delay", "count_delay"});
  CHECK(spec.measure_class() == MeasureClass::Ratio);
}

TEST_CASE("evaluate") {
  const auto e = parse_measure("succ_cnt / total_cnt", {"succ_cnt", "total_cnt"}).expr;
  CHECK(evaluate(e, std::map<std::string, double>{{"succ_cnt", 50}, {"total_cnt", 70}}) ==
        doctest::Approx(0.714285714285714));
  CHECK(evaluate(Expr::ref("m1", 0), std::vector<double>{3.5}) == 3.5);
  const std::vector<double> zero{1.0, 0.0};
  CHECK(code_of([&] { evaluate(e, zero); }) == Errc::DivisionByZero);
}

TEST_CASE("differentiate") {
  const auto ratio = parse_measure("m1 / m2", {"m1", "m2"}).expr;
  const auto m1 = Expr::ref("m1", 0), m2 = Expr::ref("m2", 1);
  CHECK(differentiate(ratio, 0) == Expr::binary(K::Div, Expr::literal(1), m2));
  const auto d2 = differentiate(ratio, 1);
  const std::vector<double> at{3.0, 2.0};
  CHECK(evaluate(d2, at) == doctest::Approx(-3.0 / 4.0));
  CHECK(to_string(d2) == "-m1 / (m2 * m2)");

  const auto lin = parse_measure("w0 + 3*m1", {"w0", "m1"}).expr;
  CHECK(differentiate(lin, 1) == Expr::literal(3));
  CHECK(differentiate(lin, 0) == Expr::literal(1));
}

TEST_CASE("classify") {
  auto cls = [](const char* text, std::vector<std::string> names) {
    std::vector<SubMeasure> subs;
    for (auto& n : names) subs.push_back({n, {AggregateOp::Sum, n}});
    return MeasureSpec::parse(text, subs).measure_class();
  };
  CHECK(cls("w0 + 2*m1 + 3*m2", {"w0", "m1", "m2"}) == MeasureClass::Linear);
  CHECK(cls("7 + 2*m1 - m2/4", {"m1", "m2"}) == MeasureClass::Linear);
  CHECK(cls("succ_cnt/total_cnt", {"succ_cnt", "total_cnt"}) == MeasureClass::Ratio);
  CHECK(cls("m1*m2 + m3", {"m1", "m2", "m3"}) == MeasureClass::Differentiable);
  CHECK(cls("m1/m1", {"m1"}) == MeasureClass::Differentiable);
  CHECK(cls("2*m1/m2", {"m1", "m2"}) == MeasureClass::Differentiable);
  const auto opaque = MeasureSpec::opaque([](std::span<const double> v) { return v[0]; }, {{"m", {}}});
  CHECK(opaque.measure_class() == MeasureClass::Opaque);
}

TEST_CASE("affine form weights") {
  const auto spec = MeasureSpec::parse("7 + 2*m1 - m2/4", {{"m1", {}}, {"m2", {}}});
  CHECK(spec.affine().intercept == 7.0);
  CHECK(spec.affine().weights == std::vector<double>{2.0, -0.25});
}

TEST_CASE("measure spec declarations") {
  CHECK(code_of([] { MeasureSpec::parse("a", {{"a", {}}, {"a", {}}}); }) == Errc::InvalidConfig);
  CHECK(code_of([] { AggregatorKind::parse("median(x)"); }) == Errc::InvalidConfig);
  CHECK(code_of([] { AggregatorKind::parse("sum(*)"); }) == Errc::InvalidConfig);
  CHECK(AggregatorKind::parse("count_distinct(user_id)") == AggregatorKind{AggregateOp::CountDistinct, "user_id"});
  CHECK(AggregatorKind::parse(" count( * ) ") == AggregatorKind{AggregateOp::Count, "*"});
  CHECK_FALSE(AggregatorKind::parse("count_distinct(u)").additive());
}

TEST_CASE("symbolic gradient matches central differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> val(1.0, 10.0);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Expr e = random_tree(rng, 4);
    std::vector<double> x(kNames.size());
    for (auto& v : x) v = val(rng);
    for (std::size_t s = 0; s < kNames.size(); ++s) {
      const double sym = evaluate(differentiate(e, s), x);
      const double h = 1e-6 * std::max(1.0, std::abs(x[s]));
      auto xp = x, xm = x;
      xp[s] += h;
      xm[s] -= h;
      const double fd = (evaluate(e, xp) - evaluate(e, xm)) / (2 * h);
      // Central differences lose digits to cancellation when f is large next to its slope.
      const double noise = 1e-16 * std::abs(evaluate(e, x)) / h;
      INFO(to_string(e), " wrt ", kNames[s]);
      CHECK(std::abs(sym - fd) <= 1e-6 * std::max(1.0, std::abs(sym)) + 10 * noise);
      ++checked;
    }
  }
  CHECK(checked == 1600);
}

TEST_CASE("print then parse reproduces the tree") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const Expr e = random_tree(rng, 5);
    const auto text = to_string(e);
    INFO(text);
    CHECK(parse_measure(text, kNames).expr == e);
  }
  const Expr tricky = Expr::binary(K::Sub, Expr::literal(-2), Expr::neg(Expr::literal(0.1)));
  CHECK(parse_measure(to_string(tricky), kNames).expr == tricky);
}
