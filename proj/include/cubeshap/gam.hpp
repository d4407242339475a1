#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "cubeshap/core.hpp"
#include "cubeshap/measure.hpp"
#include "cubeshap/shapley.hpp"

namespace cubeshap {

enum class Engine { Auto, Exact, Permutation, Kernel, AumannRiemann, AumannRatioClosed, Linear };
enum class PlayerScope { Cells, RowsOnly, ColsOnly };

const char* to_string(Engine e) noexcept;
const char* to_string(PlayerScope s) noexcept;
Engine parse_engine(std::string_view text);
PlayerScope parse_scope(std::string_view text);

inline constexpr std::size_t kDefaultPermutationSamples = 2000;
inline constexpr std::size_t kDefaultKernelSamples = 2048;
inline constexpr std::size_t kDefaultRiemannSteps = 1000;
/// Relative gap between denominator totals below which the ratio closed form
/// switches to its limit.
inline constexpr double kRatioDegeneracy = 1e-9;

struct EngineConfig {
  Engine engine = Engine::Auto;
  /// 0 selects the engine default.
  std::size_t samples = 0;
  std::size_t riemann_steps = kDefaultRiemannSteps;
  std::uint64_t seed = 42;
  PlayerScope scope = PlayerScope::Cells;
  unsigned threads = 1;
};

/// Baseline (one reference) or expected (average over a sample of references).
class ReferenceSpec {
 public:
  static ReferenceSpec baseline(ObservationMatrix reference);
  static ReferenceSpec expected(std::vector<ObservationMatrix> references);

  bool is_expected() const noexcept { return expected_; }
  const std::vector<ObservationMatrix>& references() const noexcept { return references_; }

 private:
  ReferenceSpec(std::vector<ObservationMatrix> refs, bool expected);
  std::vector<ObservationMatrix> references_;
  bool expected_;
};

/// The coalition game over the cells of an aligned explicand/reference pair:
/// sigma(Z) = g(Xt * Z + Xr * ~Z) - g(Xr), g = f(column sums).
class GamGame {
 public:
  GamGame(const MeasureSpec& spec, const ObservationMatrix& explicand, const ObservationMatrix& reference);

  const MeasureSpec& spec() const noexcept { return spec_; }
  const ObservationMatrix& explicand() const noexcept { return xt_; }
  const ObservationMatrix& reference() const noexcept { return xr_; }
  std::size_t p() const noexcept { return xt_.p(); }
  std::size_t q() const noexcept { return xt_.q(); }

  /// g evaluated at a vector of column sums.
  double g(std::span<const double> column_sums) const { return spec_.evaluate(column_sums); }
  double g_reference() const noexcept { return g_ref_; }
  double g_explicand() const noexcept { return g_ref_ + delta_y_; }
  double delta_y() const noexcept { return delta_y_; }

  /// Coalition game with whole cells, rows or columns as players.
  std::unique_ptr<CoalitionGame> as_coalition_game(PlayerScope scope) const;

 private:
  GamGame(const MeasureSpec& spec, std::pair<ObservationMatrix, ObservationMatrix> aligned);

  MeasureSpec spec_;
  ObservationMatrix xt_;
  ObservationMatrix xr_;
  double g_ref_ = 0.0;
  double delta_y_ = 0.0;
};

double set_function(const GamGame& game, const CoalitionMask& z);

ContributionMatrix shapley_exact(const GamGame& game, const EngineConfig& config);
ContributionMatrix shapley_permutation(const GamGame& game, const EngineConfig& config);
ContributionMatrix shapley_kernel(const GamGame& game, const EngineConfig& config);

/// c_uv = w_v (x^t_uv - x^r_uv).
ContributionMatrix attribute_linear(const ObservationMatrix& explicand, const ObservationMatrix& reference,
                                    const AffineForm& form);
/// Right-endpoint Riemann sum of the gradient along the straight path, m steps.
ContributionMatrix attribute_aumann_riemann(const GamGame& game, std::size_t steps);
/// Closed-form Aumann-Shapley values for y = numerator / denominator.
ContributionMatrix attribute_aumann_ratio(const GamGame& game);

/// Engine selected by `requested` for a measure of class `cls`; Auto routes
/// linear -> Linear, ratio -> AumannRatioClosed, differentiable -> AumannRiemann,
/// opaque -> Exact. Throws EngineMismatch for incompatible requests.
Engine resolve_engine(MeasureClass cls, Engine requested);

/// Full attribution: baseline mode runs one engine, expected mode averages the
/// per-reference contribution matrices element-wise.
ContributionMatrix attribute(const MeasureSpec& spec, const ObservationMatrix& explicand,
                             const ReferenceSpec& reference, const EngineConfig& config);

/// Element-wise mean of contribution matrices sharing one shape.
ContributionMatrix average(const std::vector<ContributionMatrix>& runs);

}  // namespace cubeshap
