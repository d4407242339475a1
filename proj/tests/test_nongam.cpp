#include <doctest.h>

#include <cmath>
#include <random>

#include "cubeshap/error.hpp"
#include "cubeshap/gam.hpp"
#include "cubeshap/nongam.hpp"
#include "oracles.hpp"

using namespace cubeshap;

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

struct View {
  const char* step;
  const char* page;
  const char* user;
};

RecordStore views(std::initializer_list<View> rows) {
  RecordStore::Builder b({"step", {"page"}, {"user_id"}});
  for (const auto& r : rows) {
    const std::vector<std::string> attrs{r.page};
    const std::vector<std::optional<std::string>> m{std::string(r.user)};
    b.add(r.step, attrs, m);
  }
  return std::move(b).build();
}

/// Reference: p1 viewed by u1, p2 by u2. Target: p1 unviewed, p2 by u2.
RecordStore dau_toy() { return views({{"ref", "p1", "u1"}, {"ref", "p2", "u2"}, {"target", "p2", "u2"}}); }

MeasureSpec dau_spec() { return MeasureSpec::parse("dau", {{"dau", {AggregateOp::CountDistinct, "user_id"}}}); }

NonGamGame toy_game(const RecordStore& store) {
  return NonGamGame(store, partition_store(store, CubePredicate::all({"page"}), {"page"}), dau_spec(), "target", "ref");
}

CoalitionMask only(std::size_t p, std::size_t q, std::size_t u, std::size_t v) {
  CoalitionMask z(p, q);
  z.set(u, v, true);
  return z;
}

/// Random store over attributes a (drilled) with measures x (numeric) and u (user ids).
RecordStore random_store(std::mt19937_64& rng, std::size_t p, std::size_t records) {
  RecordStore::Builder b({"t", {"a"}, {"x", "u"}});
  for (std::size_t i = 0; i < records; ++i) {
    const std::vector<std::string> attrs{"a" + std::to_string(rng() % p)};
    const std::vector<std::optional<std::string>> m{std::to_string(1 + rng() % 20), "u" + std::to_string(rng() % 15)};
    b.add(rng() % 2 ? "t1" : "t0", attrs, m);
  }
  // every sub-cube present at both steps keeps the denominators nonzero
  for (std::size_t u = 0; u < p; ++u)
    for (const char* t : {"t0", "t1"}) {
      const std::vector<std::string> attrs{"a" + std::to_string(u)};
      const std::vector<std::optional<std::string>> m{std::string("1"), std::string("u0")};
      b.add(t, attrs, m);
    }
  return std::move(b).build();
}

}  // namespace

TEST_CASE("set function on the distinct-user toy") {
  const auto store = dau_toy();
  const auto game = toy_game(store);
  REQUIRE(game.p() == 2);
  CHECK(game.y_reference() == 2.0);
  CHECK(game.y_explicand() == 1.0);
  CHECK(set_function_nongam(game, CoalitionMask(2, 1)) == 0.0);
  CHECK(set_function_nongam(game, only(2, 1, 0, 0)) == -1.0);
  CHECK(set_function_nongam(game, only(2, 1, 1, 0)) == 0.0);
  CHECK(set_function_nongam(game, CoalitionMask(2, 1, true)) == -1.0);
}

TEST_CASE("exact attribution on the distinct-user toy") {
  const auto store = dau_toy();
  const auto c = attribute_nongam(toy_game(store), EngineConfig{});
  CHECK(c.method() == "nongam-exact");
  CHECK(c.rows() == std::vector<std::string>{"p1", "p2"});
  CHECK(c.cols() == std::vector<std::string>{"dau"});
  CHECK(c(0, 0) == -1.0);
  CHECK(c(1, 0) == 0.0);
  CHECK(c.residual() == 0.0);
}

TEST_CASE("coalition datasets") {
  const auto store = dau_toy();
  const auto game = toy_game(store);
  CHECK(build_coalition_dataset(game, CoalitionMask(2, 1, true), 0) == select(store, CubePredicate::all({"page"}), "target"));
  CHECK(build_coalition_dataset(game, CoalitionMask(2, 1), 0) == select(store, CubePredicate::all({"page"}), "ref"));
  // target p1 (no records) plus reference p2
  CHECK(build_coalition_dataset(game, only(2, 1, 0, 0), 0) == RecordSubset{1});
  CHECK(code_of([&] { build_coalition_dataset(game, CoalitionMask(1, 1), 0); }) == Errc::ShapeMismatch);
  CHECK(code_of([&] { build_coalition_dataset(game, CoalitionMask(2, 1), 3); }) == Errc::InvalidArgument);
}

TEST_CASE("identical snapshots attribute nothing") {
  const auto store = views({{"t0", "p1", "u1"}, {"t0", "p2", "u2"}, {"t1", "p1", "u1"}, {"t1", "p2", "u2"}});
  const NonGamGame game(store, partition_store(store, CubePredicate::all({"page"}), {"page"}), dau_spec(), "t1", "t0");
  CHECK(game.dummy_cells() == std::vector<unsigned char>{1, 1});
  const auto c = attribute_nongam(game, EngineConfig{});
  for (double v : c.values().flat()) CHECK(v == 0.0);
}

TEST_CASE("engine and scope restrictions") {
  const auto store = dau_toy();
  const auto game = toy_game(store);
  EngineConfig cfg;
  cfg.engine = Engine::Kernel;
  CHECK(code_of([&] { attribute_nongam(game, cfg); }) == Errc::EngineMismatch);
  cfg.engine = Engine::Auto;
  cfg.scope = PlayerScope::RowsOnly;
  CHECK(code_of([&] { attribute_nongam(game, cfg); }) == Errc::InvalidConfig);

  const auto part = partition_store(store, CubePredicate::all({"page"}), {"page"});
  CHECK(code_of([&] { attribute_nongam(store, part, dau_spec(), "target", {}, EngineConfig{}); }) ==
        Errc::InvalidArgument);
  CHECK(code_of([&] { attribute_nongam(store, part, dau_spec(), "target", {"target"}, EngineConfig{}); }) ==
        Errc::InvalidConfig);
}

TEST_CASE("too many effective players for exact") {
  // 21 pages, each viewed by a different user at each step
  RecordStore::Builder b({"step", {"page"}, {"user_id"}});
  for (int i = 0; i < 21; ++i) {
    const std::vector<std::string> attrs{"p" + std::to_string(i)};
    b.add("r", attrs, std::vector<std::optional<std::string>>{"a" + std::to_string(i)});
    b.add("t", attrs, std::vector<std::optional<std::string>>{"b" + std::to_string(i)});
  }
  const auto store = std::move(b).build();
  const NonGamGame game(store, partition_store(store, CubePredicate::all({"page"}), {"page"}), dau_spec(), "t", "r");
  EngineConfig cfg;
  cfg.engine = Engine::Exact;
  CHECK(code_of([&] { attribute_nongam(game, cfg); }) == Errc::TooManyPlayers);
  cfg.engine = Engine::Auto;
  cfg.samples = 200;
  const auto c = attribute_nongam(game, cfg);
  CHECK(c.method() == "nongam-permutation");
  // swapping one page swaps one user for another, so nothing changes
  CHECK(c.delta_y() == 0.0);
  CHECK(std::abs(c.residual()) <= 1e-12);
}

TEST_CASE("undefined measure at an endpoint") {
  RecordStore::Builder b({"t", {"a"}, {"x"}});
  const std::vector<std::string> a0{"a0"};
  b.add("t0", a0, std::vector<std::optional<std::string>>{std::nullopt});
  b.add("t1", a0, std::vector<std::optional<std::string>>{"4"});
  const auto store = std::move(b).build();
  const auto spec = MeasureSpec::parse("s / n", {{"s", {AggregateOp::Sum, "x"}}, {"n", {AggregateOp::CountDistinct, "x"}}});
  const auto part = partition_store(store, CubePredicate::all({"a"}), {"a"});
  CHECK(code_of([&] { NonGamGame(store, part, spec, "t1", "t0"); }) == Errc::UndefinedMeasure);
}

TEST_CASE("additive specs agree with the pre-aggregated game") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t p = 1 + rng() % 4;
    const auto store = random_store(rng, p, 10 + rng() % 60);
    const auto part = partition_store(store, CubePredicate::all({"a"}), {"a"});
    const auto spec = trial % 2 ? MeasureSpec::parse("s / n", {{"s", {AggregateOp::Sum, "x"}}, {"n", {AggregateOp::Count, "*"}}})
                                : MeasureSpec::parse("s * s - 3 * n", {{"s", {AggregateOp::Sum, "x"}}, {"n", {AggregateOp::Count, "x"}}});
    const auto nongam = attribute_nongam(NonGamGame(store, part, spec, "t1", "t0"), EngineConfig{});
    const GamGame gam(spec, build_observation_matrix(store, part, spec, "t1"),
                      build_observation_matrix(store, part, spec, "t0"));
    const auto exact = shapley_exact(gam, EngineConfig{});
    CHECK(nongam.delta_y() == doctest::Approx(gam.delta_y()).epsilon(1e-12));
    for (std::size_t i = 0; i < exact.values().size(); ++i)
      CHECK(std::abs(nongam.values().flat()[i] - exact.values().flat()[i]) <= 1e-9);
  }
}

TEST_CASE("pruned players would have received zero") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t p = 2 + rng() % 2;
    // a step pair where some sub-cubes repeat exactly
    RecordStore::Builder b({"t", {"a"}, {"x", "u"}});
    for (std::size_t u = 0; u < p; ++u) {
      const bool frozen = rng() % 2;
      const std::vector<std::string> attrs{"a" + std::to_string(u)};
      const std::size_t n = 1 + rng() % 5;
      for (std::size_t k = 0; k < n; ++k) {
        const std::vector<std::optional<std::string>> m{std::to_string(rng() % 4), "u" + std::to_string(rng() % 6)};
        b.add("t0", attrs, m);
        if (frozen) b.add("t1", attrs, m);
      }
      if (!frozen)
        for (std::size_t k = 0, n1 = 1 + rng() % 5; k < n1; ++k) {
          const std::vector<std::optional<std::string>> m{std::to_string(rng() % 4), "u" + std::to_string(rng() % 6)};
          b.add("t1", attrs, m);
        }
    }
    const auto store = std::move(b).build();
    const auto part = partition_store(store, CubePredicate::all({"a"}), {"a"});
    const auto spec = MeasureSpec::parse("d + s / (1 + c)", {{"d", {AggregateOp::CountDistinct, "u"}},
                                                             {"s", {AggregateOp::Sum, "x"}},
                                                             {"c", {AggregateOp::CountDistinct, "x"}}});
    const NonGamGame game(store, part, spec, "t1", "t0");
    const auto c = attribute_nongam(game, EngineConfig{});
    const std::size_t n = game.p() * game.q();
    // every cell a player, nothing pruned
    std::vector<double> worth(std::size_t{1} << n);
    for (std::uint64_t m = 0; m < worth.size(); ++m) {
      std::vector<unsigned char> bits(n);
      for (std::size_t i = 0; i < n; ++i) bits[i] = m >> i & 1;
      worth[m] = set_function_nongam(game, CoalitionMask::from_flat(game.p(), game.q(), bits));
    }
    const auto brute = oracle::shapley_by_permutations(n, [&](std::uint64_t m) { return worth[m]; });
    const auto dummy = game.dummy_cells();
    for (std::size_t i = 0; i < n; ++i) {
      if (dummy[i]) CHECK(std::abs(brute[i]) <= 1e-12);
      CHECK(c.values().flat()[i] == doctest::Approx(brute[i]).epsilon(1e-9).scale(1e-9));
    }
  }
}

TEST_CASE("expected mode averages per-reference games") {
  const auto store = views({{"r0", "p1", "u1"}, {"r0", "p2", "u2"}, {"r1", "p1", "u3"}, {"r1", "p2", "u2"},
                            {"r1", "p2", "u4"}, {"t", "p2", "u2"}, {"t", "p1", "u1"}});
  const auto part = partition_store(store, CubePredicate::all({"page"}), {"page"});
  const auto e = attribute_nongam(store, part, dau_spec(), "t", {"r0", "r1"}, EngineConfig{});
  const auto a = attribute_nongam(NonGamGame(store, part, dau_spec(), "t", "r0"), EngineConfig{});
  const auto b = attribute_nongam(NonGamGame(store, part, dau_spec(), "t", "r1"), EngineConfig{});
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(e.values().flat()[i] == doctest::Approx((a.values().flat()[i] + b.values().flat()[i]) / 2));
  CHECK(e.delta_y() == doctest::Approx((a.delta_y() + b.delta_y()) / 2));
}
