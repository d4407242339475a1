#include "cubeshap/shapley.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>

#include "cubeshap/error.hpp"
#include "parallel.hpp"

namespace cubeshap {

using detail::parallel_for;

namespace {

class RecomputingWalk final : public CoalitionGame::Walk {
 public:
  explicit RecomputingWalk(const CoalitionGame& game) : game_(game), members_(game.players(), 0) {}

  double reset() override {
    std::fill(members_.begin(), members_.end(), 0);
    return game_.worth(members_);
  }
  double add(std::size_t player) override {
    members_[player] = 1;
    return game_.worth(members_);
  }

 private:
  const CoalitionGame& game_;
  std::vector<unsigned char> members_;
};

}  // namespace

std::unique_ptr<CoalitionGame::Walk> CoalitionGame::walk() const {
  return std::make_unique<RecomputingWalk>(*this);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

std::vector<double> shapley_exact(const CoalitionGame& game, unsigned threads) {
  const std::size_t n = game.players();
  if (n > kMaxExactPlayers)
    throw Error(Errc::TooManyPlayers, std::to_string(n) + " players exceed the exact limit of " +
                                          std::to_string(kMaxExactPlayers) +
                                          "; use the permutation or kernel engine");
  if (n == 0) return {};

  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> worth(subsets);
  constexpr std::size_t kChunk = 1024;
  parallel_for((subsets + kChunk - 1) / kChunk, threads, [&](std::size_t chunk) {
    std::vector<unsigned char> members(n);
    const std::size_t end = std::min(subsets, (chunk + 1) * kChunk);
    for (std::size_t s = chunk * kChunk; s < end; ++s) {
      for (std::size_t i = 0; i < n; ++i) members[i] = (s >> i) & 1U;
      worth[s] = game.worth(members);
    }
  });

  // |S|!(n-|S|-1)!/n! = 1 / (n * C(n-1, |S|))
  std::vector<double> weight(n);
  {
    double binom = 1.0;
    for (std::size_t s = 0; s < n; ++s) {
      weight[s] = 1.0 / (static_cast<double>(n) * binom);
      binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
    }
  }

  std::vector<double> phi(n, 0.0);
  for (std::size_t s = 0; s < subsets; ++s) {
    const auto size = static_cast<std::size_t>(std::popcount(s));
    if (size == n) continue;
    const double w = weight[size];
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t bit = std::size_t{1} << i;
      if (s & bit) continue;
      phi[i] += w * (worth[s | bit] - worth[s]);
    }
  }
  return phi;
}

// ---------------------------------------------------------------------------

std::vector<double> shapley_permutation(const CoalitionGame& game, const SamplingOptions& options) {
  const std::size_t n = game.players();
  if (options.samples == 0) throw Error(Errc::InvalidArgument, "permutation sample count must be positive");
  if (n == 0) return {};

  // Fixed-size blocks reduced in index order keep the result independent of the thread count.
  constexpr std::size_t kBlock = 64;
  const std::size_t blocks = (options.samples + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(n, 0.0));

  parallel_for(blocks, options.threads, [&](std::size_t b) {
    auto walk = game.walk();
    std::vector<std::size_t> order(n);
    auto& acc = partial[b];
    const std::size_t end = std::min(options.samples, (b + 1) * kBlock);
    for (std::size_t k = b * kBlock; k < end; ++k) {
      std::mt19937_64 rng(derive_seed(options.seed, k));
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[bounded(rng, i + 1)]);
      double prev = walk->reset();
      for (std::size_t player : order) {
        const double cur = walk->add(player);
        acc[player] += cur - prev;
        prev = cur;
      }
    }
  });

  std::vector<double> phi(n, 0.0);
  for (const auto& acc : partial)
    for (std::size_t i = 0; i < n; ++i) phi[i] += acc[i];
  for (auto& x : phi) x /= static_cast<double>(options.samples);
  return phi;
}

// ---------------------------------------------------------------------------

std::vector<double> shapley_kernel(const CoalitionGame& game, const SamplingOptions& options) {
  const std::size_t n = game.players();
  if (n == 0) return {};

  std::vector<unsigned char> members(n, 0);
  const double v_empty = game.worth(members);
  std::fill(members.begin(), members.end(), 1);
  const double v_full = game.worth(members);
  const double total = v_full - v_empty;
  if (n == 1) return {total};

  struct Row {
    std::vector<unsigned char> members;
    double weight;
  };
  std::vector<Row> rows;

  const bool exhaustive = n < 63 && options.samples >= (std::uint64_t{1} << n) - 2;
  if (exhaustive) {
    std::vector<double> binom(n + 1, 1.0);
    for (std::size_t s = 1; s <= n; ++s) binom[s] = binom[s - 1] * static_cast<double>(n - s + 1) / static_cast<double>(s);
    const std::uint64_t last = (std::uint64_t{1} << n) - 1;
    for (std::uint64_t s = 1; s < last; ++s) {
      std::vector<unsigned char> m(n);
      for (std::size_t i = 0; i < n; ++i) m[i] = (s >> i) & 1U;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      const double w = static_cast<double>(n - 1) /
                       (binom[size] * static_cast<double>(size) * static_cast<double>(n - size));
      rows.push_back({std::move(m), w});
    }
  } else {
    if (options.samples < n + 2)
      throw Error(Errc::InvalidArgument, "kernel engine needs at least n+2 = " + std::to_string(n + 2) +
                                             " coalition samples");
    // Size distribution proportional to the kernel mass C(n,s) * pi(s) = (n-1)/(s(n-s)).
    std::vector<double> cdf(n - 1);
    double acc = 0.0;
    for (std::size_t s = 1; s < n; ++s) {
      acc += static_cast<double>(n - 1) / (static_cast<double>(s) * static_cast<double>(n - s));
      cdf[s - 1] = acc;
    }
    for (auto& c : cdf) c /= acc;

    // Drawing S with probability proportional to pi(S) makes the Monte Carlo
    // estimate of the kernel-weighted objective a plain count-weighted fit.
    std::mt19937_64 rng(derive_seed(options.seed, 0x6b65726e656cULL));
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::size_t> pool(n);
    for (std::size_t k = 0; k < options.samples; ++k) {
      const double u = std::ldexp(static_cast<double>(rng() >> 11), -53);
      const std::size_t size =
          1 + static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      std::string key(n, '\0');
      for (std::size_t i = 0; i < std::min(size, n - 1); ++i) {
        std::swap(pool[i], pool[i + bounded(rng, n - i)]);
        key[pool[i]] = 1;
      }
      auto [it, fresh] = index.emplace(key, rows.size());
      if (fresh)
        rows.push_back({std::vector<unsigned char>(key.begin(), key.end()), 1.0});
      else
        rows[it->second].weight += 1.0;
    }
  }

  // phi_{n-1} = total - sum_{i<n-1} phi_i eliminates the efficiency constraint.
  const std::size_t m = rows.size(), unknowns = n - 1;
  Eigen::MatrixXd a(m, unknowns);
  Eigen::VectorXd b(m);
  for (std::size_t r = 0; r < m; ++r) {
    const auto& z = rows[r].members;
    const double sw = std::sqrt(rows[r].weight);
    const double last = z[n - 1];
    for (std::size_t i = 0; i < unknowns; ++i) a(r, i) = sw * (static_cast<double>(z[i]) - last);
    b(r) = sw * (game.worth(z) - v_empty - last * total);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < static_cast<Eigen::Index>(unknowns))
    throw Error(Errc::SingularSystem, "sampled coalition design has rank " + std::to_string(qr.rank()) + " < " +
                                          std::to_string(unknowns) + "; resample with another seed");
  const Eigen::VectorXd x = qr.solve(b);

  std::vector<double> phi(n);
  double assigned = 0.0;
  for (std::size_t i = 0; i < unknowns; ++i) {
    phi[i] = x(static_cast<Eigen::Index>(i));
    assigned += phi[i];
  }
  phi[n - 1] = total - assigned;
  return phi;
}

}  // namespace cubeshap
