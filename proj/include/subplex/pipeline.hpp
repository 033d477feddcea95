#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "subplex/analysis.hpp"
#include "subplex/attribution.hpp"
#include "subplex/clustering.hpp"
#include "subplex/errors.hpp"
#include "subplex/numeric.hpp"
#include "subplex/projection.hpp"

namespace subplex {

/// A compute stage failed after its inputs were accepted.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  /// Unset means min(10, n, m).
  std::optional<std::size_t> n_components;
  ClusterConfig cluster;
  ProjectionConfig projection;
  OutlierConfig outliers;
  std::size_t bins = 20;
  PcaOptions pca;

  /// Checks everything that does not depend on the data.
  void validate() const;
  /// Also checks k and n_components against the matrix shape.
  void validate_for(const AttributionMatrix& matrix) const;
  std::size_t components_for(const AttributionMatrix& matrix) const;
};

struct StageTimings {
  double pca_ms = 0.0;
  double cluster_ms = 0.0;
  double projection_ms = 0.0;
  double ranking_ms = 0.0;
};

struct Rankings {
  /// One group_mean ranking per group, indexed by group id.
  std::vector<FeatureRanking> by_group;
  /// Present when the partition has at least two groups.
  std::optional<FeatureRanking> deviation;
};

struct PipelineResult {
  ReducedMatrix reduced;
  Partition partition;
  ProjectionLayout layout;
  Rankings rankings;
  StageTimings timings;
};

/// PCA, k-means, projection and rankings. Clustering and projection work in
/// the reduced space; rankings use the attribution values as ingested.
///
/// Configuration problems raise RangeError/ValidationError before any stage
/// runs; failures inside a stage raise StageError naming it.
PipelineResult run_pipeline(const AttributionMatrix& matrix, const PipelineConfig& config);

/// Recomputes layout and rankings for an edited partition over an existing
/// reduced matrix.
PipelineResult refresh_after_edit(const AttributionMatrix& matrix, ReducedMatrix reduced, Partition partition,
                                  const PipelineConfig& config);

}  // namespace subplex
