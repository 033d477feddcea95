#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "subplex/attribution.hpp"
#include "subplex/matrix.hpp"

namespace subplex {

enum class Provenance { algorithmic, user_edited };

struct GroupInfo {
  int group_id = 0;
  std::size_t member_count = 0;
  std::size_t medoid_index = 0;

  friend bool operator==(const GroupInfo&, const GroupInfo&) = default;
};

/// Group label per instance plus per-group metadata.
///
/// Invariants: group ids are contiguous from 0, every instance carries exactly
/// one label, member counts sum to n and each medoid belongs to its group.
class Partition {
 public:
  Partition() = default;
  /// Checks every invariant against the supplied labels.
  Partition(std::vector<int> labels, std::vector<GroupInfo> groups, Provenance provenance);

  /// Compacts arbitrary non-negative labels to 0..g-1 (preserving their
  /// relative order) and computes medoids in `data`.
  static Partition from_labels(const std::vector<int>& labels, const Matrix& data, Provenance provenance);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t group_count() const noexcept { return groups_.size(); }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<GroupInfo>& groups() const noexcept { return groups_; }
  const GroupInfo& group(int group_id) const;
  bool has_group(int group_id) const noexcept;
  Provenance provenance() const noexcept { return provenance_; }

  /// Member indices of a group, ascending.
  std::vector<std::size_t> members(int group_id) const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<int> labels_;
  std::vector<GroupInfo> groups_;
  Provenance provenance_ = Provenance::algorithmic;
};

struct ClusterConfig {
  std::size_t k = 5;
  std::size_t max_iter = 300;
  /// Relative inertia change that ends the Lloyd loop.
  double tol = 1e-4;
  std::uint64_t seed = 42;
  /// Independent k-means++ restarts; the lowest final inertia wins, earliest on ties.
  std::size_t n_init = 1;

  void validate() const;
};

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;
  double inertia = 0.0;
  /// Inertia after every assignment step.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
};

/// Lloyd iterations from k-means++ seeding. Deterministic for a given seed.
KMeansResult kmeans(const Matrix& data, const ClusterConfig& config);

/// kmeans followed by medoid computation.
Partition cluster(const Matrix& data, const ClusterConfig& config);

/// Relative slack under which two distance sums count as tied in `medoid`.
inline constexpr double kMedoidTieTolerance = 1e-12;

/// Member minimising summed Euclidean distance to the other members; ties go
/// to the smallest index.
std::size_t medoid(const Matrix& data, std::span<const std::size_t> members);

/// Mean distance of each point to its k nearest neighbours.
std::vector<double> outlier_scores(const Matrix& data, std::size_t k_neighbors);

/// Indices whose score is strictly above the given percentile of all scores.
Selection flag_outliers(std::span<const double> scores, double percentile = 98.0);

/// Sum of squared distances to the nearest of the given centroids.
double inertia(const Matrix& data, const std::vector<int>& labels, const Matrix& centroids);

}  // namespace subplex
