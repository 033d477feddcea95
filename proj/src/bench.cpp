#include "subplex/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#include "json.hpp"
#include "subplex/clustering.hpp"
#include "subplex/errors.hpp"
#include "subplex/numeric.hpp"
#include "subplex/projection.hpp"

namespace subplex::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Exactly balanced class assignment in random order.
std::vector<int> balanced_classes(std::size_t count, std::mt19937_64& rng) {
  std::vector<int> classes(count);
  for (std::size_t i = 0; i < count; ++i) classes[i] = i < count / 2 ? 1 : 2;
  std::shuffle(classes.begin(), classes.end(), rng);
  return classes;
}

}  // namespace

SyntheticDataset gen_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.n == 0 || spec.n % 2 != 0) throw ValidationError("synthetic dataset size must be even and positive");
  const std::size_t half = spec.n / 2;
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  SyntheticDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(spec.n), 2);
  ds.classes.resize(spec.n);
  ds.halves.resize(spec.n);

  const auto first = balanced_classes(half, rng);
  const auto second = balanced_classes(half, rng);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (i < half) {
      const int cls = first[i];
      ds.features(r, 0) = cls == 1 ? uniform(0.0, 1.0) : uniform(1.0, 2.0);
      ds.features(r, 1) = uniform(1.0, 2.0);
      ds.classes[i] = cls;
      ds.halves[i] = 0;
    } else {
      const int cls = second[i - half];
      ds.features(r, 0) = uniform(2.0, 3.0);
      ds.features(r, 1) = cls == 1 ? uniform(3.0, 4.0) : uniform(4.0, 5.0);
      ds.classes[i] = cls;
      ds.halves[i] = 1;
    }
  }
  return ds;
}

int blackbox_predict(std::span<const double> row, int half) {
  if (row.size() < 2) throw ValidationError("black box expects features A and B");
  return half == 0 ? (row[0] > 1.0 ? 2 : 1) : (row[1] > 4.0 ? 2 : 1);
}

AttributionMatrix surrogate_attributions(const Matrix& features, const BlackBox& blackbox,
                                         const SurrogateConfig& config, std::vector<std::string> feature_names) {
  const auto n = features.rows();
  const auto m = features.cols();
  if (n < 1 || m < 1) throw ValidationError("surrogate needs a non-empty feature matrix");
  if (config.n_samples < 2) throw RangeError("surrogate needs at least two perturbation samples");
  if (!(config.ridge > 0.0)) throw RangeError("ridge must be positive");
  if (feature_names.empty()) {
    for (Eigen::Index j = 0; j < m; ++j) feature_names.push_back("f" + std::to_string(j));
  }

  const double width = config.kernel_width > 0.0 ? config.kernel_width : 0.75 * std::sqrt(static_cast<double>(m));
  Eigen::RowVectorXd scale(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto col = features.col(j);
    const double sd = std::sqrt((col.array() - col.mean()).square().mean());
    scale(j) = sd > 0.0 ? sd : 1.0;
  }

  const auto s = static_cast<Eigen::Index>(config.n_samples);
  Eigen::MatrixXd offsets(s, m);
  Eigen::MatrixXd design(s, m + 1);
  Eigen::VectorXd weights(s);
  Eigen::VectorXd target(s);
  Eigen::RowVectorXd sample(m);
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(m + 1, m + 1) * config.ridge;
  penalty(0, 0) = 0.0;

  Matrix attributions(n, m);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::seed_seq seq{static_cast<std::uint64_t>(config.seed), static_cast<std::uint64_t>(i)};
    std::mt19937_64 rng(seq);
    for (Eigen::Index r = 0; r < s; ++r) {
      for (Eigen::Index j = 0; j < m; ++j) offsets(r, j) = gauss(rng);
      sample = features.row(i) + offsets.row(r).cwiseProduct(scale);
      weights(r) = std::exp(-offsets.row(r).squaredNorm() / (width * width));
      target(r) = blackbox(std::span<const double>(sample.data(), static_cast<std::size_t>(m)),
                           static_cast<std::size_t>(i));
    }
    design.col(0).setOnes();
    design.rightCols(m) = offsets;

    const Eigen::MatrixXd gram = design.transpose() * weights.asDiagonal() * design + penalty;
    const Eigen::VectorXd rhs = design.transpose() * weights.cwiseProduct(target);
    const Eigen::VectorXd beta = gram.ldlt().solve(rhs);

    for (Eigen::Index j = 0; j < m; ++j) {
      // offsets are standardised, so the slope in feature units is beta / scale
      const double slope = beta(j + 1) / scale(j);
      const auto perturbed = offsets.col(j) * scale(j);
      const double local_sd = std::sqrt((perturbed.array() - perturbed.mean()).square().sum() / static_cast<double>(s - 1));
      attributions(i, j) = std::abs(slope) * local_sd;
    }
  }
  return AttributionMatrix(
      [n] {
        std::vector<std::string> ids;
        for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
        return ids;
      }(),
      std::move(feature_names), std::move(attributions));
}

AttributionMatrix synthetic_attributions(const SyntheticDataset& data, const SurrogateConfig& config) {
  const BlackBox rule = [&data](std::span<const double> row, std::size_t instance) {
    return static_cast<double>(blackbox_predict(row, data.halves[instance]));
  };
  return surrogate_attributions(data.features, rule, config, {"A", "B"});
}

AttributionMatrix add_noise_columns(const AttributionMatrix& matrix, std::size_t count, std::uint64_t seed) {
  if (count == 0) return matrix;
  const auto n = static_cast<Eigen::Index>(matrix.rows());
  const auto m = static_cast<Eigen::Index>(matrix.cols());
  Matrix values(n, m + static_cast<Eigen::Index>(count));
  values.leftCols(m) = matrix.values();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.5);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = m; j < values.cols(); ++j) values(i, j) = noise(rng);
  }
  auto names = matrix.feature_names();
  for (std::size_t j = 0; j < count; ++j) names.push_back("noise_" + std::to_string(j));
  return AttributionMatrix(matrix.instance_ids(), std::move(names), std::move(values), matrix.prior_labels());
}

std::vector<NoiseRow> run_noise_experiment(const AttributionMatrix& base, std::span<const int> truth,
                                           const NoiseExperimentConfig& config) {
  if (truth.size() != base.rows()) throw ValidationError("ground truth length does not match attribution rows");
  if (config.repeats < 1) throw RangeError("repeats must be at least 1");

  std::vector<NoiseRow> rows;
  for (std::size_t level = 0; level < config.noise_counts.size(); ++level) {
    const auto noise = config.noise_counts[level];
    const std::size_t pipelines = 1 + config.pca_components.size();
    // Without enough columns PCA keeps every available component.
    std::vector<std::size_t> components;
    for (auto p : config.pca_components) components.push_back(std::min(p, base.cols() + noise));
    std::vector<double> rand_sum(pipelines, 0.0);
    std::vector<double> time_sum(pipelines, 0.0);

    for (std::size_t r = 0; r < config.repeats; ++r) {
      const auto augmented = add_noise_columns(base, noise, config.seed + 7919 * (level + 1) + r);
      ClusterConfig cluster_cfg;
      cluster_cfg.k = config.k;
      cluster_cfg.seed = config.seed + r;
      cluster_cfg.n_init = config.kmeans_restarts;

      auto start = Clock::now();
      const auto raw = kmeans(augmented.values(), cluster_cfg);
      time_sum[0] += elapsed_ms(start);
      rand_sum[0] += rand_index(raw.labels, truth);

      for (std::size_t p = 0; p < config.pca_components.size(); ++p) {
        PcaOptions pca_opts;
        pca_opts.seed = config.seed + r;
        start = Clock::now();
        const auto reduced = pca_fit_transform(augmented.values(), components[p], pca_opts);
        const auto fit = kmeans(reduced.values, cluster_cfg);
        time_sum[p + 1] += elapsed_ms(start);
        rand_sum[p + 1] += rand_index(fit.labels, truth);
      }
    }

    const auto reps = static_cast<double>(config.repeats);
    rows.push_back({noise, "raw", 0, rand_sum[0] / reps, time_sum[0] / reps});
    for (std::size_t p = 0; p < config.pca_components.size(); ++p) {
      rows.push_back({noise, "pca", components[p], rand_sum[p + 1] / reps, time_sum[p + 1] / reps});
    }
  }
  return rows;
}

Blobs gen_cluster_blobs(const BlobSpec& spec) {
  if (spec.clusters < 1 || spec.attrs < spec.clusters) throw RangeError("blobs need 1 <= clusters <= attrs");
  if (spec.n < spec.clusters) throw RangeError("blobs need at least one point per cluster");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Centres on scaled unit axes: every pair is `separation` apart.
  const double offset = spec.separation / std::sqrt(2.0);
  Blobs blobs;
  blobs.data.resize(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.attrs));
  blobs.labels.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto label = static_cast<int>(i * spec.clusters / spec.n);
    blobs.labels[i] = label;
    for (std::size_t j = 0; j < spec.attrs; ++j) {
      blobs.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          gauss(rng) + (j == static_cast<std::size_t>(label) ? offset : 0.0);
    }
  }
  return blobs;
}

std::vector<ProjectionRow> run_projection_timing(const ProjectionTimingConfig& config) {
  if (!std::is_sorted(config.sizes.begin(), config.sizes.end())) throw ValidationError("sizes must be ascending");
  if (config.timing_repeats < 1) throw RangeError("timing_repeats must be at least 1");

  std::vector<ProjectionRow> rows;
  for (auto n : config.sizes) {
    BlobSpec spec;
    spec.clusters = config.clusters;
    spec.attrs = config.attrs;
    spec.n = n;
    spec.separation = config.separation;
    spec.seed = config.seed + n;
    const auto blobs = gen_cluster_blobs(spec);

    ProjectionConfig proj_cfg;
    proj_cfg.seed = config.seed;
    ClusterConfig cluster_cfg;
    cluster_cfg.k = config.clusters;
    cluster_cfg.seed = config.seed;

    std::vector<double> lamp_times;
    std::vector<double> mds_times;
    Matrix lamp_coords;
    Matrix mds_coords;
    for (std::size_t t = 0; t < config.timing_repeats; ++t) {
      auto start = Clock::now();
      const auto labels = kmeans(blobs.data, cluster_cfg).labels;
      const auto controls = select_control_points(labels, proj_cfg);
      ControlSet set;
      set.inputs.resize(static_cast<Eigen::Index>(controls.size()), blobs.data.cols());
      for (std::size_t c = 0; c < controls.size(); ++c) {
        set.inputs.row(static_cast<Eigen::Index>(c)) = blobs.data.row(static_cast<Eigen::Index>(controls[c]));
        set.groups.push_back(labels[controls[c]]);
      }
      set.outputs = seed_control_layout(set.inputs, set.groups, proj_cfg);
      lamp_coords = lamp_map_points(blobs.data, labels, set, proj_cfg);
      lamp_times.push_back(elapsed_ms(start));

      start = Clock::now();
      mds_coords = classical_mds(pairwise_distances(blobs.data), 2);
      mds_times.push_back(elapsed_ms(start));
    }
    rows.push_back({n, "lamp", median(lamp_times), silhouette(lamp_coords, blobs.labels)});
    rows.push_back({n, "mds", median(mds_times), silhouette(mds_coords, blobs.labels)});
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<NoiseRow>& rows) {
  out << "noise_columns,pipeline,components,rand_index,runtime_ms\n";
  for (const auto& r : rows) {
    out << r.noise_columns << ',' << r.pipeline << ',' << r.components << ',' << format_double(r.rand_index) << ','
        << format_double(r.runtime_ms) << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<ProjectionRow>& rows) {
  out << "n,method,runtime_ms,silhouette\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.method << ',' << format_double(r.runtime_ms) << ',' << format_double(r.silhouette) << '\n';
  }
}

std::string to_json_text(const std::vector<NoiseRow>& rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : rows) {
    doc.push_back({{"noise_columns", r.noise_columns},
                   {"pipeline", r.pipeline},
                   {"components", r.components},
                   {"rand_index", r.rand_index},
                   {"runtime_ms", r.runtime_ms}});
  }
  return doc.dump(2);
}

std::string to_json_text(const std::vector<ProjectionRow>& rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : rows) {
    doc.push_back({{"n", r.n}, {"method", r.method}, {"runtime_ms", r.runtime_ms}, {"silhouette", r.silhouette}});
  }
  return doc.dump(2);
}

}  // namespace subplex::bench
