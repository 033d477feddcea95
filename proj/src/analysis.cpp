#include "subplex/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "subplex/errors.hpp"

namespace subplex {

namespace {

std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void require_cover(const AttributionMatrix& matrix, const Partition& partition) {
  if (partition.size() != matrix.rows()) throw ValidationError("partition does not cover the attribution rows");
}

// Shared support of a feature; constant features get a unit-wide range.
std::pair<double, double> feature_range(const AttributionMatrix& matrix, Eigen::Index column) {
  const auto col = matrix.values().col(column);
  double lo = col.minCoeff();
  double hi = col.maxCoeff();
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

}  // namespace

FeatureRanking rank_features_by_group_mean(const AttributionMatrix& matrix, const Partition& partition, int group_id) {
  require_cover(matrix, partition);
  if (!partition.has_group(group_id)) throw ValidationError("unknown group " + std::to_string(group_id));
  const auto members = partition.members(group_id);
  if (members.empty()) throw ValidationError("group " + std::to_string(group_id) + " is empty");

  RowVector sum = RowVector::Zero(matrix.values().cols());
  for (auto i : members) sum += matrix.values().row(static_cast<Eigen::Index>(i));

  FeatureRanking ranking;
  ranking.basis = RankingBasis::group_mean;
  ranking.group_id = group_id;
  ranking.scores.resize(matrix.cols());
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    ranking.scores[j] = sum(static_cast<Eigen::Index>(j)) / static_cast<double>(members.size());
  }
  ranking.order = descending_order(ranking.scores);
  return ranking;
}

std::vector<FeatureDistribution> feature_distributions(const AttributionMatrix& matrix, const Partition& partition,
                                                       std::size_t bins) {
  require_cover(matrix, partition);
  const auto groups = partition.group_count();
  std::vector<std::vector<std::size_t>> members(groups);
  for (std::size_t i = 0; i < partition.size(); ++i) members[static_cast<std::size_t>(partition.labels()[i])].push_back(i);

  std::vector<FeatureDistribution> out(matrix.cols());
  std::vector<double> values;
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const auto [lo, hi] = feature_range(matrix, col);
    auto& dist = out[j];
    dist.per_group.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      values.clear();
      for (auto i : members[g]) values.push_back(matrix.values()(static_cast<Eigen::Index>(i), col));
      const double weight = std::max<double>(1.0, static_cast<double>(values.size()));
      dist.per_group.push_back(histogram(values, lo, hi, bins, weight));
    }
    dist.bin_edges = dist.per_group.front().bin_edges;
  }
  return out;
}

FeatureRanking rank_features_by_deviation(const AttributionMatrix& matrix, const Partition& partition,
                                          std::size_t bins) {
  require_cover(matrix, partition);
  if (partition.group_count() < 2) throw ValidationError("deviation ranking needs at least two groups");

  const auto distributions = feature_distributions(matrix, partition, bins);
  FeatureRanking ranking;
  ranking.basis = RankingBasis::deviation_emd;
  ranking.scores.assign(matrix.cols(), 0.0);
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    const auto& hists = distributions[j].per_group;
    double score = 0.0;
    for (std::size_t a = 0; a < hists.size(); ++a) {
      for (std::size_t b = a + 1; b < hists.size(); ++b) score += emd_1d(hists[a], hists[b]);
    }
    ranking.scores[j] = score;
  }
  ranking.order = descending_order(ranking.scores);
  return ranking;
}

SelectionSplitStats selection_split_stats(const AttributionMatrix& matrix, const Partition& partition,
                                          const Selection& selection) {
  require_cover(matrix, partition);
  selection.check_against(matrix.rows());
  const auto m = static_cast<Eigen::Index>(matrix.cols());
  const auto groups = partition.group_count();

  std::vector<RowVector> sel_sum(groups, RowVector::Zero(m));
  std::vector<RowVector> rest_sum(groups, RowVector::Zero(m));
  SelectionSplitStats stats(groups);
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const auto g = static_cast<std::size_t>(partition.labels()[i]);
    if (selection.contains(i)) {
      sel_sum[g] += matrix.values().row(static_cast<Eigen::Index>(i));
      ++stats[g].selected_count;
    } else {
      rest_sum[g] += matrix.values().row(static_cast<Eigen::Index>(i));
      ++stats[g].unselected_count;
    }
  }
  auto mean = [m](const RowVector& sum, std::size_t count) {
    std::vector<double> out(static_cast<std::size_t>(m), 0.0);
    if (count == 0) return out;
    for (Eigen::Index j = 0; j < m; ++j) out[static_cast<std::size_t>(j)] = sum(j) / static_cast<double>(count);
    return out;
  };
  for (std::size_t g = 0; g < groups; ++g) {
    stats[g].group_id = static_cast<int>(g);
    stats[g].selected_mean = mean(sel_sum[g], stats[g].selected_count);
    stats[g].unselected_mean = mean(rest_sum[g], stats[g].unselected_count);
  }
  return stats;
}

Partition add_subpopulation(const Partition& partition, const Selection& selection, const Matrix& data) {
  if (selection.empty()) throw ValidationError("cannot add a subpopulation from an empty selection");
  selection.check_against(partition.size());
  if (static_cast<std::size_t>(data.rows()) != partition.size()) throw ValidationError("data does not match partition");

  auto labels = partition.labels();
  const int fresh = static_cast<int>(partition.group_count());
  for (auto i : selection.indices()) labels[i] = fresh;
  return Partition::from_labels(labels, data, Provenance::user_edited);
}

Partition remove_subpopulation(const Partition& partition, int group_id, const Matrix& data) {
  if (!partition.has_group(group_id)) throw ValidationError("unknown group " + std::to_string(group_id));
  if (partition.group_count() < 2) throw ValidationError("cannot remove the last remaining group");
  if (static_cast<std::size_t>(data.rows()) != partition.size()) throw ValidationError("data does not match partition");

  auto labels = partition.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != group_id) continue;
    double best = std::numeric_limits<double>::infinity();
    int target = -1;
    for (const auto& g : partition.groups()) {
      if (g.group_id == group_id) continue;
      const double d = (data.row(static_cast<Eigen::Index>(i)) - data.row(static_cast<Eigen::Index>(g.medoid_index))).norm();
      if (d < best) {
        best = d;
        target = g.group_id;
      }
    }
    labels[i] = target;
  }
  return Partition::from_labels(labels, data, Provenance::user_edited);
}

Selection low_attribution_instances(const AttributionMatrix& matrix, double relative_threshold) {
  if (!(relative_threshold >= 0.0)) throw RangeError("threshold must be non-negative");
  const auto abs_values = matrix.values().cwiseAbs();
  const double cutoff = relative_threshold * abs_values.maxCoeff();
  std::vector<std::size_t> rows;
  for (Eigen::Index i = 0; i < abs_values.rows(); ++i) {
    if (abs_values.row(i).mean() < cutoff) rows.push_back(static_cast<std::size_t>(i));
  }
  return Selection::from_sorted(std::move(rows), matrix.rows());
}

SparsityProfile sparsity_profile(const AttributionMatrix& matrix, double relative_threshold) {
  if (!(relative_threshold >= 0.0)) throw RangeError("threshold must be non-negative");
  const auto abs_values = matrix.values().cwiseAbs();
  const double cutoff = relative_threshold * abs_values.maxCoeff();
  SparsityProfile profile;
  profile.near_zero_fraction.reserve(matrix.rows());
  for (Eigen::Index i = 0; i < abs_values.rows(); ++i) {
    const auto small = (abs_values.row(i).array() < cutoff).count();
    profile.near_zero_fraction.push_back(static_cast<double>(small) / static_cast<double>(matrix.cols()));
  }
  profile.mean_near_zero_fraction =
      std::accumulate(profile.near_zero_fraction.begin(), profile.near_zero_fraction.end(), 0.0) /
      static_cast<double>(matrix.rows());
  return profile;
}

}  // namespace subplex
