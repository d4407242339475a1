#include "cubeshap/nongam.hpp"

#include <algorithm>
#include <mutex>
#include <string>
#include <unordered_map>

#include "cubeshap/error.hpp"
#include "cubeshap/shapley.hpp"

namespace cubeshap {

NonGamGame::NonGamGame(const RecordStore& store, DrillPartition partition, MeasureSpec spec,
                       std::string explicand_label, std::string reference_label)
    : store_(&store), partition_(std::move(partition)), spec_(std::move(spec)),
      explicand_label_(std::move(explicand_label)), reference_label_(std::move(reference_label)) {
  for (const auto& s : spec_.submeasures()) check_aggregator(store, s.aggregator);
  for (const auto& child : partition_.children) {
    explicand_rows_.push_back(select(store, child, explicand_label_));
    reference_rows_.push_back(select(store, child, reference_label_));
  }
  auto at = [&](bool explicand) {
    const std::vector<unsigned char> members(p() * q(), explicand ? 1 : 0);
    try {
      return measure_at(members);
    } catch (const Error& e) {
      if (e.code() != Errc::DivisionByZero) throw;
      throw Error(Errc::UndefinedMeasure, "measure is undefined at time step '" +
                                              (explicand ? explicand_label_ : reference_label_) + "': " + e.what());
    }
  };
  y_ref_ = at(false);
  delta_y_ = at(true) - y_ref_;
}

double NonGamGame::measure_at(std::span<const unsigned char> members) const {
  const std::size_t p = this->p(), q = this->q();
  std::vector<double> values(q);
  std::vector<std::span<const std::uint32_t>> parts(p);
  for (std::size_t v = 0; v < q; ++v) {
    for (std::size_t u = 0; u < p; ++u) parts[u] = records(u, members[u * q + v] != 0);
    values[v] = aggregate_union(*store_, parts, spec_.submeasures()[v].aggregator);
  }
  return spec_.evaluate(values);
}

std::vector<unsigned char> NonGamGame::dummy_cells() const {
  const std::size_t p = this->p(), q = this->q();
  std::vector<unsigned char> dummy(p * q, 0);
  auto values = [&](const RecordSubset& rows, std::size_t m) {
    std::vector<std::uint32_t> codes;
    for (auto r : rows)
      if (auto c = store_->measure_code(m, r); c != RecordStore::kNull) codes.push_back(c);
    std::sort(codes.begin(), codes.end());
    return codes;
  };
  for (std::size_t v = 0; v < q; ++v) {
    const auto& agg = spec_.submeasures()[v].aggregator;
    const bool row_count = agg.op == AggregateOp::Count;
    const std::size_t m = row_count ? 0 : store_->measure_index(agg.column);
    for (std::size_t u = 0; u < p; ++u) {
      const auto& t = explicand_rows_[u];
      const auto& r = reference_rows_[u];
      bool same = false;
      if (row_count)
        same = t.size() == r.size();
      else
        same = values(t, m) == values(r, m);
      dummy[u * q + v] = same ? 1 : 0;
    }
  }
  return dummy;
}

RecordSubset build_coalition_dataset(const NonGamGame& game, const CoalitionMask& z, std::size_t submeasure) {
  if (z.rows() != game.p() || z.cols() != game.q())
    throw Error(Errc::ShapeMismatch, "coalition mask shape does not match the game");
  if (submeasure >= game.q()) throw Error(Errc::InvalidArgument, "sub-measure index out of range");
  RecordSubset out;
  for (std::size_t u = 0; u < game.p(); ++u) {
    const auto& rows = game.records(u, z(u, submeasure));
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

double set_function_nongam(const NonGamGame& game, const CoalitionMask& z) {
  if (z.rows() != game.p() || z.cols() != game.q())
    throw Error(Errc::ShapeMismatch, "coalition mask shape does not match the game");
  return game.measure_at(z.flat()) - game.y_reference();
}

namespace {

/// Game over the non-dummy cells; dummies stay at their reference records.
/// Worth values are memoised per member set.
class PrunedGame final : public CoalitionGame {
 public:
  PrunedGame(const NonGamGame& game, std::vector<std::size_t> players)
      : game_(game), players_(std::move(players)) {}

  std::size_t players() const override { return players_.size(); }

  double worth(std::span<const unsigned char> members) const override {
    std::string key(members.begin(), members.end());
    {
      std::lock_guard lock(mutex_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    std::vector<unsigned char> cells(game_.p() * game_.q(), 0);
    for (std::size_t i = 0; i < players_.size(); ++i) cells[players_[i]] = members[i];
    const double value = game_.measure_at(cells) - game_.y_reference();
    std::lock_guard lock(mutex_);
    memo_.insert_or_assign(std::move(key), value);
    return value;
  }

 private:
  const NonGamGame& game_;
  std::vector<std::size_t> players_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, double> memo_;
};

}  // namespace

ContributionMatrix attribute_nongam(const NonGamGame& game, const EngineConfig& config) {
  if (config.scope != PlayerScope::Cells)
    throw Error(Errc::InvalidConfig, "the record-level game only supports cell players");
  const auto dummy = game.dummy_cells();
  std::vector<std::size_t> players;
  for (std::size_t i = 0; i < dummy.size(); ++i)
    if (!dummy[i]) players.push_back(i);

  Engine engine = config.engine;
  if (engine == Engine::Auto) engine = players.size() <= kMaxExactPlayers ? Engine::Exact : Engine::Permutation;
  if (engine != Engine::Exact && engine != Engine::Permutation)
    throw Error(Errc::EngineMismatch, std::string("engine '") + to_string(engine) +
                                          "' is not available for non-additive measures; use exact or permutation");

  const PrunedGame pruned(game, players);
  std::vector<double> phi;
  if (engine == Engine::Exact) {
    if (players.size() > kMaxExactPlayers)
      throw Error(Errc::TooManyPlayers, std::to_string(players.size()) + " effective players exceed the exact limit of " +
                                            std::to_string(kMaxExactPlayers) + "; use the permutation engine");
    phi = shapley_exact(pruned, config.threads);
  } else {
    phi = shapley_permutation(pruned, {config.samples ? config.samples : kDefaultPermutationSamples, config.seed,
                                       config.threads});
  }

  Matrix c(game.p(), game.q());
  for (std::size_t i = 0; i < players.size(); ++i) c.flat()[players[i]] = phi[i];
  return ContributionMatrix(make_labels(game.partition().child_labels()), make_labels(game.spec().names()),
                            std::move(c), game.delta_y(),
                            engine == Engine::Exact ? "nongam-exact" : "nongam-permutation");
}

ContributionMatrix attribute_nongam(const RecordStore& store, const DrillPartition& partition,
                                    const MeasureSpec& spec, const std::string& explicand_label,
                                    const std::vector<std::string>& reference_labels, const EngineConfig& config) {
  if (reference_labels.empty()) throw Error(Errc::InvalidArgument, "at least one reference label is required");
  std::vector<ContributionMatrix> runs;
  for (std::size_t i = 0; i < reference_labels.size(); ++i) {
    if (reference_labels[i] == explicand_label)
      throw Error(Errc::InvalidConfig, "reference label equals the explicand label '" + explicand_label + "'");
    EngineConfig cfg = config;
    cfg.seed = i == 0 ? config.seed : derive_seed(config.seed, i);
    const NonGamGame game(store, partition, spec, explicand_label, reference_labels[i]);
    runs.push_back(attribute_nongam(game, cfg));
  }
  return average(runs);
}

}  // namespace cubeshap
