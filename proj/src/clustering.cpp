#include "subplex/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "subplex/errors.hpp"

namespace subplex {

Partition::Partition(std::vector<int> labels, std::vector<GroupInfo> groups, Provenance provenance)
    : labels_(std::move(labels)), groups_(std::move(groups)), provenance_(provenance) {
  std::vector<std::size_t> counts(groups_.size(), 0);
  for (int l : labels_) {
    if (l < 0 || static_cast<std::size_t>(l) >= groups_.size()) {
      throw ValidationError("label " + std::to_string(l) + " has no group entry");
    }
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto& info = groups_[g];
    if (info.group_id != static_cast<int>(g)) throw ValidationError("group ids must be contiguous from 0");
    if (info.member_count != counts[g]) throw ValidationError("member count mismatch for group " + std::to_string(g));
    if (info.member_count == 0) throw ValidationError("group " + std::to_string(g) + " is empty");
    if (info.medoid_index >= labels_.size() || labels_[info.medoid_index] != info.group_id) {
      throw ValidationError("medoid of group " + std::to_string(g) + " is not a member");
    }
  }
}

Partition Partition::from_labels(const std::vector<int>& labels, const Matrix& data, Provenance provenance) {
  if (static_cast<std::size_t>(data.rows()) != labels.size()) {
    throw ValidationError("label count does not match data rows");
  }
  std::map<int, int> remap;
  for (int l : labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [label, id] : remap) id = next++;

  std::vector<int> dense(labels.size());
  std::vector<std::vector<std::size_t>> members(remap.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    dense[i] = remap[labels[i]];
    members[static_cast<std::size_t>(dense[i])].push_back(i);
  }
  std::vector<GroupInfo> groups;
  groups.reserve(members.size());
  for (std::size_t g = 0; g < members.size(); ++g) {
    groups.push_back({static_cast<int>(g), members[g].size(), medoid(data, members[g])});
  }
  return Partition(std::move(dense), std::move(groups), provenance);
}

const GroupInfo& Partition::group(int group_id) const {
  if (!has_group(group_id)) throw ValidationError("unknown group " + std::to_string(group_id));
  return groups_[static_cast<std::size_t>(group_id)];
}

bool Partition::has_group(int group_id) const noexcept {
  return group_id >= 0 && static_cast<std::size_t>(group_id) < groups_.size();
}

std::vector<std::size_t> Partition::members(int group_id) const {
  group(group_id);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == group_id) out.push_back(i);
  }
  return out;
}

void ClusterConfig::validate() const {
  if (k < 1) throw RangeError("k must be at least 1");
  if (max_iter < 1) throw RangeError("max_iter must be at least 1");
  if (!(tol > 0.0)) throw RangeError("tol must be positive");
  if (n_init < 1) throw RangeError("n_init must be at least 1");
}

namespace {

struct Assignment {
  std::vector<int> labels;
  std::vector<double> sq_dist;
  double inertia = 0.0;
};

Assignment assign(const Matrix& data, const Matrix& centroids) {
  const auto n = data.rows();
  Assignment a;
  a.labels.resize(static_cast<std::size_t>(n));
  a.sq_dist.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (data.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    a.labels[static_cast<std::size_t>(i)] = best_c;
    a.sq_dist[static_cast<std::size_t>(i)] = best;
  }
  a.inertia = std::accumulate(a.sq_dist.begin(), a.sq_dist.end(), 0.0);
  return a;
}

Matrix kmeans_plus_plus(const Matrix& data, std::size_t k, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(data.rows());
  Matrix centroids(static_cast<Eigen::Index>(k), data.cols());
  std::vector<bool> chosen(n, false);

  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  chosen[pick] = true;
  centroids.row(0) = data.row(static_cast<Eigen::Index>(pick));

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = (data.row(static_cast<Eigen::Index>(i)) - centroids.row(0)).squaredNorm();
  }

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double cumulative = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cumulative += d2[i];
        pick = i;
        if (cumulative > target) break;
      }
    } else {
      // every remaining point coincides with a centre
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> any(0, free.size() - 1);
      pick = free[any(rng)];
    }
    chosen[pick] = true;
    centroids.row(static_cast<Eigen::Index>(c)) = data.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (data.row(static_cast<Eigen::Index>(i)) - centroids.row(static_cast<Eigen::Index>(c)))
                                  .squaredNorm());
    }
  }
  return centroids;
}

// Moves the farthest points into empty clusters. Returns true if anything moved.
bool reseed_empty(const Matrix& data, Matrix& centroids, Assignment& a) {
  const auto k = static_cast<std::size_t>(centroids.rows());
  std::vector<std::size_t> counts(k, 0);
  for (int l : a.labels) ++counts[static_cast<std::size_t>(l)];

  bool moved = false;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    std::size_t far = a.labels.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
      if (counts[static_cast<std::size_t>(a.labels[i])] > 1 && a.sq_dist[i] > far_d) {
        far_d = a.sq_dist[i];
        far = i;
      }
    }
    if (far == a.labels.size()) break;
    --counts[static_cast<std::size_t>(a.labels[far])];
    ++counts[c];
    a.labels[far] = static_cast<int>(c);
    a.sq_dist[far] = 0.0;
    centroids.row(static_cast<Eigen::Index>(c)) = data.row(static_cast<Eigen::Index>(far));
    moved = true;
  }
  return moved;
}

Matrix update_centroids(const Matrix& data, const std::vector<int>& labels, const Matrix& previous) {
  Matrix sums = Matrix::Zero(previous.rows(), previous.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(previous.rows()), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sums.row(labels[i]) += data.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (Eigen::Index c = 0; c < sums.rows(); ++c) {
    const auto cnt = counts[static_cast<std::size_t>(c)];
    sums.row(c) = cnt > 0 ? (sums.row(c) / static_cast<double>(cnt)).eval() : previous.row(c);
  }
  return sums;
}

}  // namespace

double inertia(const Matrix& data, const std::vector<int>& labels, const Matrix& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total += (data.row(static_cast<Eigen::Index>(i)) - centroids.row(labels[i])).squaredNorm();
  }
  return total;
}

namespace {

KMeansResult lloyd(const Matrix& data, const ClusterConfig& config, std::mt19937_64& rng) {
  KMeansResult result;
  result.centroids = kmeans_plus_plus(data, config.k, rng);

  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
    auto a = assign(data, result.centroids);
    for (std::size_t attempt = 0; attempt < config.k && reseed_empty(data, result.centroids, a); ++attempt) {
      a = assign(data, result.centroids);
    }
    result.labels = std::move(a.labels);
    result.inertia = a.inertia;
    result.inertia_history.push_back(a.inertia);
    result.iterations = iter;

    const bool converged =
        a.inertia == 0.0 || (std::isfinite(previous) && std::abs(previous - a.inertia) < config.tol * previous);
    if (converged || iter == config.max_iter) break;
    result.centroids = update_centroids(data, result.labels, result.centroids);
    previous = a.inertia;
  }
  return result;
}

}  // namespace

KMeansResult kmeans(const Matrix& data, const ClusterConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(data.rows());
  if (config.k > n) {
    throw RangeError("k = " + std::to_string(config.k) + " exceeds the number of rows (" + std::to_string(n) + ")");
  }

  // Restarts draw from one generator, so the first restart equals a single run.
  std::mt19937_64 rng(config.seed);
  KMeansResult best = lloyd(data, config, rng);
  for (std::size_t r = 1; r < config.n_init; ++r) {
    auto candidate = lloyd(data, config, rng);
    if (candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

Partition cluster(const Matrix& data, const ClusterConfig& config) {
  return Partition::from_labels(kmeans(data, config).labels, data, Provenance::algorithmic);
}

std::size_t medoid(const Matrix& data, std::span<const std::size_t> members) {
  if (members.empty()) throw ValidationError("medoid of an empty group");
  std::vector<std::size_t> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  for (auto i : sorted) {
    if (i >= static_cast<std::size_t>(data.rows())) throw RangeError("member index out of range");
  }

  std::vector<double> sums(sorted.size(), 0.0);
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    const auto ra = data.row(static_cast<Eigen::Index>(sorted[a]));
    for (std::size_t b = a + 1; b < sorted.size(); ++b) {
      const double d = (ra - data.row(static_cast<Eigen::Index>(sorted[b]))).norm();
      sums[a] += d;
      sums[b] += d;
    }
  }
  // Sums equal up to rounding count as ties so the smallest index wins regardless of summation order.
  const double lowest = *std::min_element(sums.begin(), sums.end());
  const double slack = kMedoidTieTolerance * std::max(lowest, 1.0);
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    if (sums[a] <= lowest + slack) return sorted[a];
  }
  return sorted.front();
}

std::vector<double> outlier_scores(const Matrix& data, std::size_t k_neighbors) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (k_neighbors < 1 || k_neighbors >= n) {
    throw RangeError("k_neighbors must be in [1, n), got " + std::to_string(k_neighbors));
  }
  std::vector<double> scores(n);
  std::vector<double> dist(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist[w++] = (data.row(static_cast<Eigen::Index>(i)) - data.row(static_cast<Eigen::Index>(j))).norm();
    }
    const auto kth = dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors);
    std::nth_element(dist.begin(), kth - 1, dist.end());
    std::sort(dist.begin(), kth);
    scores[i] = std::accumulate(dist.begin(), kth, 0.0) / static_cast<double>(k_neighbors);
  }
  return scores;
}

Selection flag_outliers(std::span<const double> scores, double percentile) {
  if (!(percentile >= 0.0 && percentile <= 100.0)) throw RangeError("percentile must be in [0, 100]");
  if (scores.empty()) return {};
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = percentile / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double threshold = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);

  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > threshold) flagged.push_back(i);
  }
  return Selection::from_sorted(std::move(flagged), scores.size());
}

}  // namespace subplex
