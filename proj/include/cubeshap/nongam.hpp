#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cubeshap/core.hpp"
#include "cubeshap/cube.hpp"
#include "cubeshap/gam.hpp"
#include "cubeshap/measure.hpp"

namespace cubeshap {

/// Coalition game played on raw records: a member cell (u, v) takes the
/// explicand records of sub-cube u when aggregating sub-measure v, a
/// non-member the reference records. The store must outlive the game.
class NonGamGame {
 public:
  NonGamGame(const RecordStore& store, DrillPartition partition, MeasureSpec spec, std::string explicand_label,
             std::string reference_label);

  const RecordStore& store() const noexcept { return *store_; }
  const DrillPartition& partition() const noexcept { return partition_; }
  const MeasureSpec& spec() const noexcept { return spec_; }
  const std::string& explicand_label() const noexcept { return explicand_label_; }
  const std::string& reference_label() const noexcept { return reference_label_; }
  std::size_t p() const noexcept { return partition_.children.size(); }
  std::size_t q() const noexcept { return spec_.q(); }

  double y_reference() const noexcept { return y_ref_; }
  double y_explicand() const noexcept { return y_ref_ + delta_y_; }
  double delta_y() const noexcept { return delta_y_; }

  /// Records of sub-cube u at the explicand (true) or reference (false) step.
  const RecordSubset& records(std::size_t u, bool explicand) const {
    return explicand ? explicand_rows_[u] : reference_rows_[u];
  }

  /// f(h_1(D^{Z,1}), ..., h_q(D^{Z,q})) for a row-major p*q membership vector.
  double measure_at(std::span<const unsigned char> members) const;
  /// Cells whose swap can never change any aggregate (identical value multisets).
  std::vector<unsigned char> dummy_cells() const;

 private:
  const RecordStore* store_;
  DrillPartition partition_;
  MeasureSpec spec_;
  std::string explicand_label_;
  std::string reference_label_;
  std::vector<RecordSubset> explicand_rows_;
  std::vector<RecordSubset> reference_rows_;
  double y_ref_ = 0.0;
  double delta_y_ = 0.0;
};

/// D^{Z,i}: explicand records of member sub-cubes plus reference records of the rest.
RecordSubset build_coalition_dataset(const NonGamGame& game, const CoalitionMask& z, std::size_t submeasure);

double set_function_nongam(const NonGamGame& game, const CoalitionMask& z);

/// Exact or permutation Shapley values over sub-cube x sub-measure cells.
/// Engine::Auto picks exact when at most kMaxExactPlayers cells survive dummy
/// pruning. Several reference labels give the expected (averaged) attribution.
ContributionMatrix attribute_nongam(const RecordStore& store, const DrillPartition& partition,
                                    const MeasureSpec& spec, const std::string& explicand_label,
                                    const std::vector<std::string>& reference_labels, const EngineConfig& config);

ContributionMatrix attribute_nongam(const NonGamGame& game, const EngineConfig& config);

}  // namespace cubeshap
