#include "cubeshap/gam.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cubeshap/error.hpp"

namespace cubeshap {

const char* to_string(Engine e) noexcept {
  switch (e) {
    case Engine::Auto: return "auto";
    case Engine::Exact: return "exact";
    case Engine::Permutation: return "permutation";
    case Engine::Kernel: return "kernel";
    case Engine::AumannRiemann: return "aumann-riemann";
    case Engine::AumannRatioClosed: return "aumann-ratio-closed";
    case Engine::Linear: return "linear";
  }
  return "auto";
}

const char* to_string(PlayerScope s) noexcept {
  switch (s) {
    case PlayerScope::Cells: return "cells";
    case PlayerScope::RowsOnly: return "rows-only";
    case PlayerScope::ColsOnly: return "cols-only";
  }
  return "cells";
}

Engine parse_engine(std::string_view text) {
  for (Engine e : {Engine::Auto, Engine::Exact, Engine::Permutation, Engine::Kernel, Engine::AumannRiemann,
                   Engine::AumannRatioClosed, Engine::Linear})
    if (text == to_string(e)) return e;
  throw Error(Errc::InvalidConfig, "unknown engine '" + std::string(text) + "'");
}

PlayerScope parse_scope(std::string_view text) {
  for (PlayerScope s : {PlayerScope::Cells, PlayerScope::RowsOnly, PlayerScope::ColsOnly})
    if (text == to_string(s)) return s;
  throw Error(Errc::InvalidConfig, "unknown player scope '" + std::string(text) + "'");
}

ReferenceSpec::ReferenceSpec(std::vector<ObservationMatrix> refs, bool expected)
    : references_(std::move(refs)), expected_(expected) {
  if (references_.empty()) throw Error(Errc::InvalidArgument, "at least one reference is required");
}

ReferenceSpec ReferenceSpec::baseline(ObservationMatrix reference) {
  return ReferenceSpec({std::move(reference)}, false);
}

ReferenceSpec ReferenceSpec::expected(std::vector<ObservationMatrix> references) {
  return ReferenceSpec(std::move(references), true);
}

// ---------------------------------------------------------------------------

namespace {

std::pair<ObservationMatrix, ObservationMatrix> aligned_to_spec(const MeasureSpec& spec,
                                                                const ObservationMatrix& explicand,
                                                                const ObservationMatrix& reference) {
  auto pair = validate_pair(explicand, reference);
  if (pair.first.cols() != spec.names())
    throw Error(Errc::ColumnMismatch, "observation columns do not match the measure's sub-measures");
  return pair;
}

/// Coalition game over cells, rows or columns of a GamGame. The walk keeps
/// running column sums so each admission costs O(q) plus one evaluation of f.
class GamCoalitionGame final : public CoalitionGame {
 public:
  GamCoalitionGame(const GamGame& game, PlayerScope scope) : game_(game), scope_(scope) {
    const std::size_t p = game.p(), q = game.q();
    ref_sums_ = game.reference().values().column_sums();
    delta_.resize(p * q);
    for (std::size_t u = 0; u < p; ++u)
      for (std::size_t v = 0; v < q; ++v) delta_[u * q + v] = game.explicand()(u, v) - game.reference()(u, v);
  }

  std::size_t players() const override {
    switch (scope_) {
      case PlayerScope::Cells: return game_.p() * game_.q();
      case PlayerScope::RowsOnly: return game_.p();
      case PlayerScope::ColsOnly: return game_.q();
    }
    return 0;
  }

  double worth(std::span<const unsigned char> members) const override {
    const std::size_t p = game_.p(), q = game_.q();
    const auto& xt = game_.explicand().values();
    const auto& xr = game_.reference().values();
    std::vector<double> sums(q, 0.0);
    for (std::size_t u = 0; u < p; ++u)
      for (std::size_t v = 0; v < q; ++v) sums[v] += in_coalition(members, u, v) ? xt(u, v) : xr(u, v);
    return game_.g(sums) - game_.g_reference();
  }

  std::unique_ptr<Walk> walk() const override { return std::make_unique<SumsWalk>(*this); }

 private:
  bool in_coalition(std::span<const unsigned char> members, std::size_t u, std::size_t v) const {
    switch (scope_) {
      case PlayerScope::Cells: return members[u * game_.q() + v] != 0;
      case PlayerScope::RowsOnly: return members[u] != 0;
      case PlayerScope::ColsOnly: return members[v] != 0;
    }
    return false;
  }

  class SumsWalk final : public Walk {
   public:
    explicit SumsWalk(const GamCoalitionGame& g) : g_(g) {}

    double reset() override {
      sums_ = g_.ref_sums_;
      return 0.0;
    }

    double add(std::size_t player) override {
      const std::size_t p = g_.game_.p(), q = g_.game_.q();
      switch (g_.scope_) {
        case PlayerScope::Cells: sums_[player % q] += g_.delta_[player]; break;
        case PlayerScope::RowsOnly:
          for (std::size_t v = 0; v < q; ++v) sums_[v] += g_.delta_[player * q + v];
          break;
        case PlayerScope::ColsOnly:
          for (std::size_t u = 0; u < p; ++u) sums_[player] += g_.delta_[u * q + player];
          break;
      }
      return g_.game_.g(sums_) - g_.game_.g_reference();
    }

   private:
    const GamCoalitionGame& g_;
    std::vector<double> sums_;
  };

  const GamGame& game_;
  PlayerScope scope_;
  std::vector<double> ref_sums_;
  std::vector<double> delta_;
};

/// Packs per-player values into a contribution matrix shaped by the scope.
ContributionMatrix package(const GamGame& game, PlayerScope scope, const std::vector<double>& phi,
                           const std::string& method) {
  const auto& xt = game.explicand();
  switch (scope) {
    case PlayerScope::Cells: {
      Matrix m(game.p(), game.q());
      std::copy(phi.begin(), phi.end(), m.flat().begin());
      return ContributionMatrix(xt.row_labels(), xt.col_labels(), std::move(m), game.delta_y(), method);
    }
    case PlayerScope::RowsOnly: {
      Matrix m(game.p(), 1);
      std::copy(phi.begin(), phi.end(), m.flat().begin());
      return ContributionMatrix(xt.row_labels(), make_labels({kWildcard}), std::move(m), game.delta_y(), method);
    }
    case PlayerScope::ColsOnly: {
      Matrix m(1, game.q());
      std::copy(phi.begin(), phi.end(), m.flat().begin());
      return ContributionMatrix(make_labels({kWildcard}), xt.col_labels(), std::move(m), game.delta_y(), method);
    }
  }
  throw Error(Errc::InvalidArgument, "unknown scope");
}

/// Cell-level result collapsed to the requested scope (path methods are additive over groups).
ContributionMatrix collapse(const ContributionMatrix& c, PlayerScope scope) {
  if (scope == PlayerScope::Cells) return c;
  if (scope == PlayerScope::RowsOnly) {
    const auto sums = c.values().row_sums();
    Matrix m(sums.size(), 1);
    std::copy(sums.begin(), sums.end(), m.flat().begin());
    return ContributionMatrix(c.row_labels(), make_labels({kWildcard}), std::move(m), c.delta_y(), c.method());
  }
  const auto sums = c.values().column_sums();
  Matrix m(1, sums.size());
  std::copy(sums.begin(), sums.end(), m.flat().begin());
  return ContributionMatrix(make_labels({kWildcard}), c.col_labels(), std::move(m), c.delta_y(), c.method());
}

}  // namespace

GamGame::GamGame(const MeasureSpec& spec, const ObservationMatrix& explicand, const ObservationMatrix& reference)
    : GamGame(spec, aligned_to_spec(spec, explicand, reference)) {}

GamGame::GamGame(const MeasureSpec& spec, std::pair<ObservationMatrix, ObservationMatrix> aligned)
    : spec_(spec), xt_(std::move(aligned.first)), xr_(std::move(aligned.second)) {
  auto at = [&](const ObservationMatrix& x, const char* which) {
    try {
      return spec_.evaluate(x.values().column_sums());
    } catch (const Error& e) {
      if (e.code() != Errc::DivisionByZero) throw;
      throw Error(Errc::UndefinedMeasure, std::string("measure is undefined at the ") + which + ": " + e.what());
    }
  };
  g_ref_ = at(xr_, "reference");
  delta_y_ = at(xt_, "explicand") - g_ref_;
}

std::unique_ptr<CoalitionGame> GamGame::as_coalition_game(PlayerScope scope) const {
  return std::make_unique<GamCoalitionGame>(*this, scope);
}

double set_function(const GamGame& game, const CoalitionMask& z) {
  if (z.rows() != game.p() || z.cols() != game.q())
    throw Error(Errc::ShapeMismatch, "coalition mask shape does not match the game");
  return game.as_coalition_game(PlayerScope::Cells)->worth(z.flat());
}

ContributionMatrix shapley_exact(const GamGame& game, const EngineConfig& config) {
  const auto g = game.as_coalition_game(config.scope);
  return package(game, config.scope, shapley_exact(*g, config.threads), "exact");
}

ContributionMatrix shapley_permutation(const GamGame& game, const EngineConfig& config) {
  const auto g = game.as_coalition_game(config.scope);
  SamplingOptions opts{config.samples ? config.samples : kDefaultPermutationSamples, config.seed, config.threads};
  return package(game, config.scope, shapley_permutation(*g, opts), "permutation");
}

ContributionMatrix shapley_kernel(const GamGame& game, const EngineConfig& config) {
  const auto g = game.as_coalition_game(config.scope);
  std::size_t k = config.samples;
  if (k == 0) {
    const std::size_t n = g->players();
    k = n < 12 ? std::min<std::size_t>((std::size_t{1} << n) - 2, kDefaultKernelSamples) : kDefaultKernelSamples;
    k = std::max<std::size_t>(k, 1);
  }
  SamplingOptions opts{k, config.seed, config.threads};
  return package(game, config.scope, shapley_kernel(*g, opts), "kernel");
}

ContributionMatrix attribute_linear(const ObservationMatrix& explicand, const ObservationMatrix& reference,
                                    const AffineForm& form) {
  auto [xt, xr] = validate_pair(explicand, reference);
  if (form.weights.size() != xt.q()) throw Error(Errc::ShapeMismatch, "weight count differs from column count");
  const std::size_t p = xt.p(), q = xt.q();
  Matrix c(p, q);
  for (std::size_t u = 0; u < p; ++u)
    for (std::size_t v = 0; v < q; ++v) c(u, v) = form.weights[v] * (xt(u, v) - xr(u, v));
  auto g = [&](const ObservationMatrix& x) {
    const auto sums = x.values().column_sums();
    double y = form.intercept;
    for (std::size_t v = 0; v < q; ++v) y += form.weights[v] * sums[v];
    return y;
  };
  return ContributionMatrix(xt.row_labels(), xt.col_labels(), std::move(c), g(xt) - g(xr), "linear");
}

ContributionMatrix attribute_aumann_riemann(const GamGame& game, std::size_t steps) {
  if (steps == 0) throw Error(Errc::InvalidArgument, "Riemann step count must be positive");
  const auto& spec = game.spec();
  if (!spec.expr()) throw Error(Errc::EngineMismatch, "Riemann integration needs a differentiable measure");
  const std::size_t p = game.p(), q = game.q();
  const auto ref_sums = game.reference().values().column_sums();
  const auto exp_sums = game.explicand().values().column_sums();

  std::vector<double> sums(q), grad_total(q, 0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(steps);
    for (std::size_t v = 0; v < q; ++v) sums[v] = ref_sums[v] + alpha * (exp_sums[v] - ref_sums[v]);
    for (std::size_t v = 0; v < q; ++v) {
      try {
        grad_total[v] += evaluate(spec.partial(v), sums);
      } catch (const Error& e) {
        if (e.code() != Errc::DivisionByZero) throw;
        std::ostringstream os;
        os << "gradient undefined at alpha=" << alpha << " (" << e.what() << ")";
        throw Error(Errc::PathSingularity, os.str());
      }
    }
  }

  Matrix c(p, q);
  for (std::size_t u = 0; u < p; ++u)
    for (std::size_t v = 0; v < q; ++v)
      c(u, v) = (game.explicand()(u, v) - game.reference()(u, v)) / static_cast<double>(steps) * grad_total[v];
  return ContributionMatrix(game.explicand().row_labels(), game.explicand().col_labels(), std::move(c),
                            game.delta_y(), "aumann-riemann");
}

namespace {

/// (ln(1+d) - d/(1+d)) / d^2, evaluated without cancellation near d = 0.
double ratio_curvature(double d) {
  if (std::abs(d) < 1e-2) {
    // sum_j (-1)^j (j+1)/(j+2) d^j
    double term = 1.0, sum = 0.0;
    for (int j = 0; j < 18; ++j) {
      sum += term * (j + 1.0) / (j + 2.0);
      term *= -d;
    }
    return sum;
  }
  return (std::log1p(d) - d / (1.0 + d)) / (d * d);
}

}  // namespace

ContributionMatrix attribute_aumann_ratio(const GamGame& game) {
  const auto [num, den] = game.spec().ratio_slots();
  const std::size_t p = game.p(), q = game.q();
  const auto ref_sums = game.reference().values().column_sums();
  const auto exp_sums = game.explicand().values().column_sums();
  const double x1r = ref_sums[num], x1t = exp_sums[num];
  const double x2r = ref_sums[den], x2t = exp_sums[den];
  if (x2r == 0.0 || x2t == 0.0)
    throw Error(Errc::UndefinedMeasure, "denominator total of '" + game.spec().submeasures()[den].name +
                                            "' is zero; the ratio is not defined");
  if ((x2r > 0.0) != (x2t > 0.0))
    throw Error(Errc::PathSingularity, "denominator total changes sign along the path");

  double w_num = 0.0, w_den = 0.0;
  const double gap = x2t - x2r;
  const double d = gap / x2r;
  if (std::abs(gap) <= kRatioDegeneracy * std::max(std::abs(x2t), std::abs(x2r))) {
    // Near x2t = x2r: ln(1+d)/d by its Taylor series. At d = 0 this is 1/x2 for
    // the numerator and -(x1t + x1r) / (2 x2^2) for the denominator.
    w_num = (1.0 - d / 2.0 + d * d / 3.0) / x2r;
  } else {
    w_num = std::log1p(d) / gap;
  }
  w_den = -x1r / (x2r * x2t) - (x1t - x1r) * ratio_curvature(d) / (x2r * x2r);

  Matrix c(p, q);
  for (std::size_t u = 0; u < p; ++u) {
    c(u, num) = (game.explicand()(u, num) - game.reference()(u, num)) * w_num;
    c(u, den) = (game.explicand()(u, den) - game.reference()(u, den)) * w_den;
  }
  return ContributionMatrix(game.explicand().row_labels(), game.explicand().col_labels(), std::move(c),
                            game.delta_y(), "aumann-ratio-closed");
}

Engine resolve_engine(MeasureClass cls, Engine requested) {
  if (requested == Engine::Auto) {
    switch (cls) {
      case MeasureClass::Linear: return Engine::Linear;
      case MeasureClass::Ratio: return Engine::AumannRatioClosed;
      case MeasureClass::Differentiable: return Engine::AumannRiemann;
      case MeasureClass::Opaque: return Engine::Exact;
    }
  }
  auto mismatch = [&] {
    return Error(Errc::EngineMismatch, std::string("engine '") + to_string(requested) +
                                           "' does not apply to a " + to_string(cls) + " measure");
  };
  switch (requested) {
    case Engine::Linear:
      if (cls != MeasureClass::Linear) throw mismatch();
      break;
    case Engine::AumannRatioClosed:
      if (cls != MeasureClass::Ratio) throw mismatch();
      break;
    case Engine::AumannRiemann:
      if (cls == MeasureClass::Opaque) throw mismatch();
      break;
    default: break;
  }
  return requested;
}

ContributionMatrix average(const std::vector<ContributionMatrix>& runs) {
  if (runs.empty()) throw Error(Errc::InvalidArgument, "nothing to average");
  if (runs.size() == 1) return runs.front();
  const auto& first = runs.front();
  Matrix sum(first.values().rows(), first.values().cols());
  double dy = 0.0;
  for (const auto& r : runs) {
    if (r.rows() != first.rows() || r.cols() != first.cols())
      throw Error(Errc::ShapeMismatch, "cannot average contribution matrices of different shapes");
    for (std::size_t i = 0; i < sum.size(); ++i) sum.flat()[i] += r.values().flat()[i];
    dy += r.delta_y();
  }
  const double n = static_cast<double>(runs.size());
  for (auto& x : sum.flat()) x /= n;
  return ContributionMatrix(first.row_labels(), first.col_labels(), std::move(sum), dy / n, first.method());
}

ContributionMatrix attribute(const MeasureSpec& spec, const ObservationMatrix& explicand,
                             const ReferenceSpec& reference, const EngineConfig& config) {
  const Engine engine = resolve_engine(spec.measure_class(), config.engine);

  // Align every reference against the union of all row labels.
  ObservationMatrix xt = explicand;
  for (const auto& r : reference.references()) xt = validate_pair(xt, r).first;

  std::vector<ContributionMatrix> runs;
  runs.reserve(reference.references().size());
  for (std::size_t i = 0; i < reference.references().size(); ++i) {
    const auto& xr = reference.references()[i];
    EngineConfig cfg = config;
    cfg.seed = i == 0 ? config.seed : derive_seed(config.seed, i);
    if (engine == Engine::Linear) {
      runs.push_back(collapse(attribute_linear(xt, xr, spec.affine()), config.scope));
      continue;
    }
    const GamGame game(spec, xt, xr);
    switch (engine) {
      case Engine::Exact: runs.push_back(shapley_exact(game, cfg)); break;
      case Engine::Permutation: runs.push_back(shapley_permutation(game, cfg)); break;
      case Engine::Kernel: runs.push_back(shapley_kernel(game, cfg)); break;
      case Engine::AumannRiemann:
        runs.push_back(collapse(attribute_aumann_riemann(game, cfg.riemann_steps), config.scope));
        break;
      case Engine::AumannRatioClosed: runs.push_back(collapse(attribute_aumann_ratio(game), config.scope)); break;
      default: throw Error(Errc::EngineMismatch, "unresolved engine");
    }
  }
  return average(runs);
}

}  // namespace cubeshap
