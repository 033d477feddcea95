#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "subplex/attribution.hpp"
#include "subplex/clustering.hpp"
#include "subplex/numeric.hpp"

namespace subplex {

enum class RankingBasis { group_mean, deviation_emd };

struct FeatureRanking {
  RankingBasis basis = RankingBasis::group_mean;
  /// Set for group_mean rankings.
  std::optional<int> group_id;
  /// Feature indices, scores descending, ties by ascending index.
  std::vector<std::size_t> order;
  /// Indexed by feature.
  std::vector<double> scores;
};

/// Orders features by their mean attribution inside one group.
FeatureRanking rank_features_by_group_mean(const AttributionMatrix& matrix, const Partition& partition, int group_id);

/// Orders features by the sum over group pairs of the EMD between their
/// size-normalised histograms. Needs at least two groups.
FeatureRanking rank_features_by_deviation(const AttributionMatrix& matrix, const Partition& partition,
                                          std::size_t bins = 20);

/// Per-feature histograms of every group on edges shared by all groups
/// ([min, max] of the feature over the whole dataset).
struct FeatureDistribution {
  std::vector<double> bin_edges;
  /// Indexed by group id; each sums to 1.
  std::vector<Histogram> per_group;
};

std::vector<FeatureDistribution> feature_distributions(const AttributionMatrix& matrix, const Partition& partition,
                                                       std::size_t bins = 20);

struct GroupSplit {
  int group_id = 0;
  std::size_t selected_count = 0;
  std::size_t unselected_count = 0;
  std::vector<double> selected_mean;
  std::vector<double> unselected_mean;
};

using SelectionSplitStats = std::vector<GroupSplit>;

SelectionSplitStats selection_split_stats(const AttributionMatrix& matrix, const Partition& partition,
                                          const Selection& selection);

/// Moves the selected rows into a new group. Groups left empty are dropped and
/// ids compacted; medoids are recomputed in `data`.
Partition add_subpopulation(const Partition& partition, const Selection& selection, const Matrix& data);

/// Reassigns every member of `group_id` to the remaining group whose medoid is
/// nearest in `data`, then compacts ids.
Partition remove_subpopulation(const Partition& partition, int group_id, const Matrix& data);

/// Rows whose mean |w| falls below relative_threshold * max |w| over the matrix.
Selection low_attribution_instances(const AttributionMatrix& matrix, double relative_threshold = 0.01);

struct SparsityProfile {
  /// Per row: fraction of weights with |w| below the threshold.
  std::vector<double> near_zero_fraction;
  double mean_near_zero_fraction = 0.0;
};

SparsityProfile sparsity_profile(const AttributionMatrix& matrix, double relative_threshold = 0.01);

}  // namespace subplex
