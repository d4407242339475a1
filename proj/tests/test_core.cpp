#include <doctest.h>

#include <cmath>
#include <limits>

#include "cubeshap/core.hpp"
#include "cubeshap/error.hpp"
#include "cubeshap/experiments.hpp"

using namespace cubeshap;

namespace {

ObservationMatrix obs(std::vector<std::string> rows, std::vector<std::string> cols, std::vector<double> v,
                      std::string ts = {}) {
  Matrix m(rows.size(), cols.size());
  for (std::size_t i = 0; i < v.size(); ++i) m.flat()[i] = v[i];
  return ObservationMatrix(make_labels(std::move(rows)), make_labels(std::move(cols)), std::move(m), std::move(ts));
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::Io;
}

}  // namespace

TEST_CASE("partition by data center") {
  const auto part = partition(CubePredicate::all({"data_center", "os_version"}), {"data_center"},
                              {{"data_center", {"dc2", "dc1"}}});
  REQUIRE(part.children.size() == 2);
  CHECK(part.children[0].label() == "(dc1,*)");
  CHECK(part.children[1].label() == "(dc2,*)");
  CHECK(part.child_labels() == std::vector<std::string>{"dc1", "dc2"});
}

TEST_CASE("partition of a bound parent with a singleton domain") {
  const auto parent = CubePredicate::all({"data_center", "os_version"}).with("data_center", "dc1");
  const auto part = partition(parent, {"os_version"}, {{"os_version", {"v1"}}});
  REQUIRE(part.children.size() == 1);
  CHECK(part.children[0].label() == "(dc1,v1)");
}

TEST_CASE("partition over two dimensions is the ordered cross product") {
  const auto part = partition(CubePredicate::all({"data_center", "os_version"}), {"data_center", "os_version"},
                              {{"data_center", {"dc1", "dc2"}}, {"os_version", {"v2", "v1"}}});
  CHECK(part.child_labels() == std::vector<std::string>{"dc1|v1", "dc1|v2", "dc2|v1", "dc2|v2"});
  // stable across calls
  const auto again = partition(CubePredicate::all({"data_center", "os_version"}), {"data_center", "os_version"},
                               {{"data_center", {"dc2", "dc1"}}, {"os_version", {"v1", "v2"}}});
  CHECK(again.child_labels() == part.child_labels());
}

TEST_CASE("partition errors") {
  const auto parent = CubePredicate::all({"a", "b"}).with("a", "x");
  CHECK(code_of([&] { partition(parent, {"a"}, {{"a", {"x"}}}); }) == Errc::NonWildcardDrill);
  CHECK(code_of([&] { partition(parent, {"b"}, {{"b", {}}}); }) == Errc::EmptyDomain);
  CHECK(code_of([&] { partition(parent, {"b"}, {}); }) == Errc::EmptyDomain);
  CHECK(code_of([&] { partition(parent, {}, {}); }) == Errc::InvalidArgument);
}

TEST_CASE("predicate bindings") {
  CHECK(code_of([] { CubePredicate({{"a", "1"}, {"a", "2"}}); }) == Errc::InvalidArgument);
  const CubePredicate p({{"a", "1"}, {"b", kWildcard}});
  CHECK(p.value_of("a") == "1");
  CHECK(p.is_wildcard("b"));
  CHECK(p.is_wildcard("c"));
  CHECK_FALSE(p.is_wildcard("a"));
  CHECK(p.label() == "(1,*)");
}

TEST_CASE("observation matrix rejects non-finite values and bad shapes") {
  CHECK(code_of([] { obs({"r"}, {"c"}, {std::numeric_limits<double>::quiet_NaN()}); }) == Errc::InvalidArgument);
  CHECK(code_of([] { obs({"r"}, {"c"}, {std::numeric_limits<double>::infinity()}); }) == Errc::InvalidArgument);
  CHECK(code_of([] {
          ObservationMatrix(make_labels({"a", "b"}), make_labels({"c"}), Matrix(1, 1));
        }) == Errc::ShapeMismatch);
}

TEST_CASE("contribution matrix residual") {
  Matrix m(2, 1);
  m(0, 0) = 1.5;
  m(1, 0) = -0.5;
  const ContributionMatrix c(make_labels({"a", "b"}), make_labels({"x"}), m, 1.0, "test");
  CHECK(c.residual() == 0.0);
  const ContributionMatrix d(make_labels({"a", "b"}), make_labels({"x"}), m, 0.75, "test");
  CHECK(d.residual() == doctest::Approx(0.25));
}

TEST_CASE("marginalize") {
  SUBCASE("all zero") {
    const ContributionMatrix c(make_labels({"a", "b"}), make_labels({"x", "y"}), Matrix(2, 2), 0.0, "t");
    for (const auto& [label, v] : marginalize(c, Axis::Rows)) CHECK(v == 0.0);
    for (const auto& [label, v] : marginalize(c, Axis::Cols)) CHECK(v == 0.0);
  }
  SUBCASE("one by one") {
    Matrix m(1, 1, 0.25);
    const ContributionMatrix c(make_labels({"a"}), make_labels({"x"}), m, 0.25, "t");
    const auto rows = marginalize(c, Axis::Rows);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].first == "a");
    CHECK(rows[0].second == 0.25);
  }
  SUBCASE("admissions columns") {
    const auto c = run_berkeley();
    const auto cols = marginalize(c, Axis::Cols);
    REQUIRE(cols.size() == 2);
    CHECK(cols[0].first == "applicants");
    CHECK(std::abs(cols[0].second * 100 - 14.51) <= 0.03);
    CHECK(std::abs(cols[1].second * 100 - -28.68) <= 0.03);
    double rows = 0, colsum = 0;
    for (const auto& [l, v] : marginalize(c, Axis::Rows)) rows += v;
    for (const auto& [l, v] : cols) colsum += v;
    CHECK(std::abs(rows - c.delta_y()) <= std::abs(c.residual()) + 1e-12 * std::abs(c.delta_y()));
    CHECK(std::abs(colsum - c.delta_y()) <= std::abs(c.residual()) + 1e-12 * std::abs(c.delta_y()));
  }
}

TEST_CASE("validate_pair") {
  const auto a = obs({"dc1", "dc2"}, {"s", "t"}, {1, 2, 3, 4}, "t1");
  SUBCASE("identical labels are returned unchanged") {
    const auto b = obs({"dc1", "dc2"}, {"s", "t"}, {5, 6, 7, 8}, "t0");
    const auto [x, y] = validate_pair(a, b);
    CHECK(x.values() == a.values());
    CHECK(y.values() == b.values());
    CHECK(x.rows() == a.rows());
  }
  SUBCASE("an extra explicand row is zero-filled in the reference") {
    const auto t = obs({"dc1", "dc2", "dc3"}, {"s", "t"}, {1, 2, 3, 4, 5, 6});
    const auto r = obs({"dc1", "dc2"}, {"s", "t"}, {1, 1, 1, 1});
    const auto [x, y] = validate_pair(t, r);
    CHECK(y.rows() == std::vector<std::string>{"dc1", "dc2", "dc3"});
    CHECK(y(2, 0) == 0.0);
    CHECK(y(2, 1) == 0.0);
    CHECK(x(2, 1) == 6.0);
  }
  SUBCASE("reference-only rows are appended and zero-filled in the explicand") {
    const auto r = obs({"dc0", "dc2"}, {"s", "t"}, {9, 9, 7, 8});
    const auto [x, y] = validate_pair(a, r);
    CHECK(x.rows() == std::vector<std::string>{"dc1", "dc2", "dc0"});
    CHECK(x(2, 0) == 0.0);
    CHECK(y(0, 0) == 0.0);
    CHECK(y(1, 0) == 7.0);
    CHECK(y(2, 1) == 9.0);
  }
  SUBCASE("reference columns are permuted into explicand order") {
    const auto r = obs({"dc1", "dc2"}, {"t", "s"}, {10, 1, 20, 2});
    const auto [x, y] = validate_pair(a, r);
    CHECK(y.cols() == std::vector<std::string>{"s", "t"});
    CHECK(y(0, 0) == 1.0);
    CHECK(y(1, 1) == 20.0);
  }
  SUBCASE("differing columns") {
    const auto r = obs({"dc1", "dc2"}, {"s", "u"}, {1, 2, 3, 4});
    CHECK(code_of([&] { validate_pair(a, r); }) == Errc::ColumnMismatch);
  }
  SUBCASE("idempotent") {
    const auto r = obs({"dc0", "dc2"}, {"t", "s"}, {9, 9, 7, 8});
    const auto once = validate_pair(a, r);
    const auto twice = validate_pair(once.first, once.second);
    CHECK(twice.first.values() == once.first.values());
    CHECK(twice.second.values() == once.second.values());
    CHECK(twice.first.rows() == once.first.rows());
  }
}

TEST_CASE("coalition mask") {
  CoalitionMask z(2, 3);
  z.set(1, 2, true);
  CHECK(z(1, 2));
  CHECK_FALSE(z(0, 0));
  CHECK(z.flat()[5] == 1);
  CHECK(code_of([] { CoalitionMask::from_flat(2, 2, {1, 0, 1}); }) == Errc::ShapeMismatch);
}

TEST_CASE("error categories") {
  CHECK(category_of(Errc::UndefinedMeasure) == ErrorCategory::Numerical);
  CHECK(category_of(Errc::DivisionByZero) == ErrorCategory::Numerical);
  CHECK(category_of(Errc::NoRecords) == ErrorCategory::Validation);
  CHECK(category_of(Errc::Io) == ErrorCategory::Io);
  const Error e(Errc::EmptyDomain, "nothing");
  CHECK(std::string(e.what()).find("EmptyDomain") != std::string::npos);
}
