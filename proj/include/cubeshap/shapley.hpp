#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace cubeshap {

/// A cooperative game over players 0..n-1. worth() must be a pure function of
/// the member set so that concurrent evaluation is safe.
class CoalitionGame {
 public:
  virtual ~CoalitionGame() = default;

  virtual std::size_t players() const = 0;
  virtual double worth(std::span<const unsigned char> members) const = 0;

  /// Incremental evaluation along a permutation: reset() yields the worth of
  /// the empty coalition, each add() the worth after admitting one player.
  class Walk {
   public:
    virtual ~Walk() = default;
    virtual double reset() = 0;
    virtual double add(std::size_t player) = 0;
  };

  /// The default walk re-evaluates worth() after every admission.
  virtual std::unique_ptr<Walk> walk() const;
};

inline constexpr std::size_t kMaxExactPlayers = 20;

struct SamplingOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

/// SplitMix64 finaliser over (master, stream); used to give every permutation,
/// repetition or reference its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

/// Uniform integer in [0, bound) from a 64-bit draw (multiply-shift, no modulo bias).
template <class Rng>
std::uint64_t bounded(Rng& rng, std::uint64_t bound) {
  __extension__ using u128 = unsigned __int128;
  return static_cast<std::uint64_t>((static_cast<u128>(rng()) * bound) >> 64);
}

/// Exact Shapley values by subset enumeration; TooManyPlayers above kMaxExactPlayers.
std::vector<double> shapley_exact(const CoalitionGame& game, unsigned threads = 1);

/// Mean marginal contribution over `samples` uniformly random permutations.
std::vector<double> shapley_permutation(const CoalitionGame& game, const SamplingOptions& options);

/// Kernel-weighted least squares with efficiency imposed exactly. Enumerates
/// every proper coalition when samples >= 2^n - 2, otherwise samples coalition
/// sizes in proportion to the Shapley kernel mass.
std::vector<double> shapley_kernel(const CoalitionGame& game, const SamplingOptions& options);

}  // namespace cubeshap
