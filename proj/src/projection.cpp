#include "subplex/projection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "subplex/errors.hpp"
#include "subplex/numeric.hpp"

namespace subplex {

namespace {

constexpr double kSnapDistance = 1e-12;

}  // namespace

void ProjectionConfig::validate() const {
  if (controls_per_cluster && *controls_per_cluster < 1) throw RangeError("controls_per_cluster must be at least 1");
  if (!(inner_shrink > 0.0 && inner_shrink <= 1.0)) throw RangeError("inner_shrink must be in (0, 1]");
  if (!(same_class_boost >= 1.0)) throw RangeError("same_class_boost must be at least 1");
  if (!(epsilon > 0.0)) throw RangeError("epsilon must be positive");
}

std::size_t ProjectionConfig::controls_for(std::size_t group_size) const {
  const std::size_t wanted =
      controls_per_cluster
          ? *controls_per_cluster
          : std::max<std::size_t>(5, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(group_size)))));
  return std::min(wanted, group_size);
}

std::vector<std::size_t> select_control_points(std::span<const int> labels, const ProjectionConfig& config) {
  config.validate();
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  if (members.empty()) throw ValidationError("cannot select controls from an empty partition");

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> out;
  for (auto& [group, pool] : members) {
    const std::size_t take = config.controls_for(pool.size());
    // partial Fisher-Yates
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

std::vector<std::size_t> select_control_points(const Partition& partition, const ProjectionConfig& config) {
  return select_control_points(std::span<const int>(partition.labels()), config);
}

Matrix seed_control_layout(const Matrix& control_rows, std::span<const int> control_groups,
                           const ProjectionConfig& config) {
  config.validate();
  const auto c = control_rows.rows();
  if (c < 1) throw ValidationError("need at least one control point");
  if (static_cast<std::size_t>(c) != control_groups.size()) throw ValidationError("control group count mismatch");

  Matrix d = pairwise_distances(control_rows);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      if (i != j && control_groups[static_cast<std::size_t>(i)] == control_groups[static_cast<std::size_t>(j)]) {
        d(i, j) *= config.inner_shrink;
      }
    }
  }
  return classical_mds(d, 2);
}

Matrix lamp_map_points(const Matrix& points, std::span<const int> point_groups, const ControlSet& controls,
                       const ProjectionConfig& config) {
  config.validate();
  const auto c = controls.inputs.rows();
  const auto m = controls.inputs.cols();
  if (c < 1) throw ValidationError("LAMP needs at least one control point");
  if (controls.outputs.rows() != c || controls.outputs.cols() != 2 ||
      controls.groups.size() != static_cast<std::size_t>(c)) {
    throw ValidationError("control set is inconsistent");
  }
  if (points.cols() != m) throw ValidationError("points and controls differ in dimension");
  if (point_groups.size() != static_cast<std::size_t>(points.rows())) throw ValidationError("point group count mismatch");

  // Fallback map for degenerate cross-covariance: first two input axes.
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(m, 2);
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(m, 2); ++k) axes(k, k) = 1.0;

  Matrix out(points.rows(), 2);
  Eigen::VectorXd alpha(c);
  Eigen::MatrixXd x_hat(c, m);
  Eigen::MatrixXd y_hat(c, 2);

  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const auto x = points.row(p);
    const int group = point_groups[static_cast<std::size_t>(p)];

    Eigen::Index snapped = -1;
    for (Eigen::Index i = 0; i < c; ++i) {
      const double d2 = (x - controls.inputs.row(i)).squaredNorm();
      if (std::sqrt(d2) < kSnapDistance) {
        snapped = i;
        break;
      }
      const double boost = controls.groups[static_cast<std::size_t>(i)] == group ? config.same_class_boost : 1.0;
      alpha(i) = boost / (d2 + config.epsilon);
    }
    if (snapped >= 0) {
      out.row(p) = controls.outputs.row(snapped);
      continue;
    }

    const double total = alpha.sum();
    const Eigen::RowVectorXd x_tilde = (alpha.transpose() * controls.inputs) / total;
    const Eigen::RowVector2d y_tilde = (alpha.transpose() * controls.outputs) / total;
    x_hat = controls.inputs.rowwise() - x_tilde;
    y_hat = controls.outputs.rowwise() - y_tilde;

    const Eigen::MatrixXd cross = x_hat.transpose() * alpha.asDiagonal() * y_hat;  // m x 2
    Eigen::MatrixXd rotation = axes;
    if (cross.allFinite() && cross.norm() > 0.0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
      rotation = svd.matrixU() * svd.matrixV().transpose();
    }
    out.row(p) = (x - x_tilde) * rotation + y_tilde;
  }
  return out;
}

ProjectionLayout lamp_map(const Matrix& data, std::span<const std::size_t> control_indices,
                          const Matrix& control_coords, const Partition& partition, const ProjectionConfig& config) {
  if (control_indices.empty()) throw ValidationError("LAMP needs at least one control point");
  if (static_cast<std::size_t>(control_coords.rows()) != control_indices.size() || control_coords.cols() != 2) {
    throw ValidationError("control coordinates must be given for every control");
  }
  if (partition.size() != static_cast<std::size_t>(data.rows())) throw ValidationError("partition does not cover data");

  ControlSet controls;
  controls.inputs.resize(static_cast<Eigen::Index>(control_indices.size()), data.cols());
  controls.outputs = control_coords;
  for (std::size_t i = 0; i < control_indices.size(); ++i) {
    const auto idx = control_indices[i];
    if (idx >= partition.size()) throw RangeError("control index out of range");
    controls.inputs.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(idx));
    controls.groups.push_back(partition.labels()[idx]);
  }

  ProjectionLayout layout;
  layout.coords = lamp_map_points(data, partition.labels(), controls, config);
  layout.control_indices.assign(control_indices.begin(), control_indices.end());
  layout.control_coords = control_coords;
  for (const auto& g : partition.groups()) {
    const auto row = layout.coords.row(static_cast<Eigen::Index>(g.medoid_index));
    layout.medoid_coords.push_back({row(0), row(1)});
  }
  layout.outlier_flags.assign(partition.size(), false);
  return layout;
}

ProjectionLayout project(const Matrix& data, const Partition& partition, const ProjectionConfig& config,
                         const OutlierConfig& outliers) {
  const auto controls = select_control_points(partition, config);
  Matrix rows(static_cast<Eigen::Index>(controls.size()), data.cols());
  std::vector<int> groups;
  groups.reserve(controls.size());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(controls[i]));
    groups.push_back(partition.labels()[controls[i]]);
  }
  const Matrix seeded = seed_control_layout(rows, groups, config);
  auto layout = lamp_map(data, controls, seeded, partition, config);

  const auto n = static_cast<std::size_t>(data.rows());
  if (n >= 2) {
    const auto k = std::min(outliers.k_neighbors, n - 1);
    const auto scores = outlier_scores(data, k);
    const auto flagged = flag_outliers(scores, outliers.percentile);
    for (auto i : flagged.indices()) layout.outlier_flags[i] = true;
  }
  return layout;
}

}  // namespace subplex
