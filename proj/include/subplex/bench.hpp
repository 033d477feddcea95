#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "subplex/attribution.hpp"
#include "subplex/matrix.hpp"

namespace subplex::bench {

/// Two-feature, two-class dataset: the first half is decided by feature A,
/// the second half by feature B.
struct SyntheticSpec {
  std::size_t n = 10000;
  std::uint64_t seed = 42;
};

struct SyntheticDataset {
  Matrix features;          // n x 2, columns A and B
  std::vector<int> classes; // 1 or 2
  std::vector<int> halves;  // 0 for the first half, 1 for the second
};

SyntheticDataset gen_synthetic_dataset(const SyntheticSpec& spec);

/// Rule that generated the classes: A > 1 in the first half, B > 4 in the second.
int blackbox_predict(std::span<const double> row, int half);

/// Black-box output for a perturbed copy of the given instance.
using BlackBox = std::function<double(std::span<const double> row, std::size_t instance)>;

struct SurrogateConfig {
  std::size_t n_samples = 500;
  /// Width of the exponential kernel on standardised distances; 0 means 0.75 * sqrt(m).
  double kernel_width = 0.0;
  double ridge = 1.0;
  std::uint64_t seed = 42;
};

/// Local linear surrogate per instance: Gaussian perturbations scaled by the
/// column standard deviations, exponential kernel weights and a weighted ridge
/// fit. Attribution = |coefficient| * standard deviation of the perturbed feature.
AttributionMatrix surrogate_attributions(const Matrix& features, const BlackBox& blackbox,
                                         const SurrogateConfig& config,
                                         std::vector<std::string> feature_names = {});

/// Attributions of the synthetic dataset under its generating rule.
AttributionMatrix synthetic_attributions(const SyntheticDataset& data, const SurrogateConfig& config);

/// Appends `count` columns of U[0, 0.5] noise named noise_0, noise_1, ...
AttributionMatrix add_noise_columns(const AttributionMatrix& matrix, std::size_t count, std::uint64_t seed);

struct NoiseExperimentConfig {
  std::vector<std::size_t> noise_counts{500, 1000, 2000, 4000};
  /// One PCA pipeline per entry.
  std::vector<std::size_t> pca_components{10};
  std::size_t k = 2;
  /// k-means++ restarts per clustering, shared by every pipeline.
  std::size_t kmeans_restarts = 10;
  std::size_t repeats = 5;
  std::uint64_t seed = 42;
};

struct NoiseRow {
  std::size_t noise_columns = 0;
  std::string pipeline;  // "raw" or "pca"
  std::size_t components = 0;  // 0 for raw
  double rand_index = 0.0;
  double runtime_ms = 0.0;
};

/// Mean Rand index against `truth` and mean wall-clock per (noise level, pipeline).
std::vector<NoiseRow> run_noise_experiment(const AttributionMatrix& base, std::span<const int> truth,
                                           const NoiseExperimentConfig& config);

struct BlobSpec {
  std::size_t clusters = 3;
  std::size_t attrs = 30;
  std::size_t n = 1000;
  /// Distance between cluster centres in units of the per-axis standard deviation.
  double separation = 5.0;
  std::uint64_t seed = 42;
};

struct Blobs {
  Matrix data;
  std::vector<int> labels;
};

Blobs gen_cluster_blobs(const BlobSpec& spec);

struct ProjectionTimingConfig {
  std::vector<std::size_t> sizes{500, 1000, 2000, 5000};
  std::size_t clusters = 3;
  std::size_t attrs = 30;
  double separation = 5.0;
  std::uint64_t seed = 42;
  /// Each timing is the median over this many runs.
  std::size_t timing_repeats = 3;
};

struct ProjectionRow {
  std::size_t n = 0;
  std::string method;  // "lamp" or "mds"
  double runtime_ms = 0.0;
  double silhouette = 0.0;
};

/// Wall-clock of the LAMP pipeline (k-means labels, control selection, seeding,
/// mapping) against classical MDS on all points, with 2-D silhouettes against
/// the generating labels.
std::vector<ProjectionRow> run_projection_timing(const ProjectionTimingConfig& config);

void write_csv(std::ostream& out, const std::vector<NoiseRow>& rows);
void write_csv(std::ostream& out, const std::vector<ProjectionRow>& rows);
std::string to_json_text(const std::vector<NoiseRow>& rows);
std::string to_json_text(const std::vector<ProjectionRow>& rows);

}  // namespace subplex::bench
