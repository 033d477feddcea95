#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "subplex/clustering.hpp"
#include "subplex/matrix.hpp"

namespace subplex {

struct ProjectionConfig {
  /// Controls sampled per group; unset means max(5, ceil(sqrt(group size))).
  std::optional<std::size_t> controls_per_cluster;
  /// Factor applied to distances between same-group controls before seeding.
  double inner_shrink = 0.7;
  /// Weight multiplier for controls in the mapped point's own group.
  double same_class_boost = 1.3;
  double epsilon = 1e-9;
  std::uint64_t seed = 42;

  void validate() const;
  std::size_t controls_for(std::size_t group_size) const;
};

struct OutlierConfig {
  std::size_t k_neighbors = 10;
  double percentile = 98.0;
};

using Point2 = std::array<double, 2>;

struct ProjectionLayout {
  Matrix coords;  // n x 2
  std::vector<std::size_t> control_indices;
  Matrix control_coords;  // c x 2
  /// Indexed by group id; equals coords of that group's medoid.
  std::vector<Point2> medoid_coords;
  std::vector<bool> outlier_flags;
};

/// Control points in 2-D together with their source rows and groups.
struct ControlSet {
  Matrix inputs;   // c x m
  Matrix outputs;  // c x 2
  std::vector<int> groups;
};

/// Samples min(controls, group size) members per group without replacement.
/// Blocks are emitted in group-id order, each sorted ascending.
std::vector<std::size_t> select_control_points(const Partition& partition, const ProjectionConfig& config);
std::vector<std::size_t> select_control_points(std::span<const int> labels, const ProjectionConfig& config);

/// Classical MDS of the controls after shrinking same-group distances.
Matrix seed_control_layout(const Matrix& control_rows, std::span<const int> control_groups,
                           const ProjectionConfig& config);

/// Class-aware local affine mapping of each row. Every row is mapped
/// independently of the others.
Matrix lamp_map_points(const Matrix& points, std::span<const int> point_groups, const ControlSet& controls,
                       const ProjectionConfig& config);

/// Maps every row of `data`, fills medoid coordinates from `partition` and
/// leaves outlier flags cleared.
ProjectionLayout lamp_map(const Matrix& data, std::span<const std::size_t> control_indices,
                          const Matrix& control_coords, const Partition& partition, const ProjectionConfig& config);

/// Control selection, seeding, mapping and outlier flagging in one call.
ProjectionLayout project(const Matrix& data, const Partition& partition, const ProjectionConfig& config,
                         const OutlierConfig& outliers = {});

}  // namespace subplex
