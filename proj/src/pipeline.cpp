#include "subplex/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <utility>

namespace subplex {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
auto run_stage(const char* stage, double& elapsed, F&& body) {
  const auto start = Clock::now();
  try {
    auto out = body();
    elapsed = elapsed_ms(start);
    return out;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

Rankings compute_rankings(const AttributionMatrix& matrix, const Partition& partition, std::size_t bins) {
  Rankings out;
  out.by_group.reserve(partition.group_count());
  for (const auto& g : partition.groups()) out.by_group.push_back(rank_features_by_group_mean(matrix, partition, g.group_id));
  if (partition.group_count() >= 2) out.deviation = rank_features_by_deviation(matrix, partition, bins);
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (n_components && *n_components < 1) throw RangeError("n_components must be at least 1");
  if (bins < 1) throw RangeError("bins must be at least 1");
  if (outliers.k_neighbors < 1) throw RangeError("k_neighbors must be at least 1");
  if (!(outliers.percentile >= 0.0 && outliers.percentile <= 100.0)) throw RangeError("percentile must be in [0, 100]");
  cluster.validate();
  projection.validate();
}

std::size_t PipelineConfig::components_for(const AttributionMatrix& matrix) const {
  const auto limit = std::min(matrix.rows(), matrix.cols());
  return n_components ? *n_components : std::min<std::size_t>(10, limit);
}

void PipelineConfig::validate_for(const AttributionMatrix& matrix) const {
  validate();
  if (matrix.rows() < 2) throw ValidationError("the pipeline needs at least two instances");
  if (cluster.k > matrix.rows()) {
    throw RangeError("k = " + std::to_string(cluster.k) + " exceeds the " + std::to_string(matrix.rows()) + " instances");
  }
  const auto p = components_for(matrix);
  if (p > std::min(matrix.rows(), matrix.cols())) {
    throw RangeError("n_components = " + std::to_string(p) + " exceeds min(n, m)");
  }
}

PipelineResult run_pipeline(const AttributionMatrix& matrix, const PipelineConfig& config) {
  config.validate_for(matrix);
  PipelineResult result;
  result.reduced = run_stage("pca", result.timings.pca_ms, [&] {
    return pca_fit_transform(matrix.values(), config.components_for(matrix), config.pca);
  });
  result.partition = run_stage("cluster", result.timings.cluster_ms, [&] {
    return cluster(result.reduced.values, config.cluster);
  });
  result.layout = run_stage("projection", result.timings.projection_ms, [&] {
    return project(result.reduced.values, result.partition, config.projection, config.outliers);
  });
  result.rankings = run_stage("ranking", result.timings.ranking_ms, [&] {
    return compute_rankings(matrix, result.partition, config.bins);
  });
  return result;
}

PipelineResult refresh_after_edit(const AttributionMatrix& matrix, ReducedMatrix reduced, Partition partition,
                                  const PipelineConfig& config) {
  config.validate();
  if (partition.size() != matrix.rows() || static_cast<std::size_t>(reduced.values.rows()) != matrix.rows()) {
    throw ValidationError("partition, reduced matrix and attributions disagree in size");
  }
  PipelineResult result;
  result.reduced = std::move(reduced);
  result.partition = std::move(partition);
  result.layout = run_stage("projection", result.timings.projection_ms, [&] {
    return project(result.reduced.values, result.partition, config.projection, config.outliers);
  });
  result.rankings = run_stage("ranking", result.timings.ranking_ms, [&] {
    return compute_rankings(matrix, result.partition, config.bins);
  });
  return result;
}

}  // namespace subplex
