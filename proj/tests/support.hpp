#pragma once

// Hand-rolled generators and independent oracles shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "subplex/attribution.hpp"
#include "subplex/clustering.hpp"
#include "subplex/matrix.hpp"
#include "subplex/numeric.hpp"

namespace subplex::testing {

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t m, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = u(rng);
  return x;
}

inline AttributionMatrix make_matrix(const Matrix& values) {
  std::vector<std::string> ids, names;
  for (Eigen::Index i = 0; i < values.rows(); ++i) ids.push_back("r" + std::to_string(i));
  for (Eigen::Index j = 0; j < values.cols(); ++j) names.push_back("f" + std::to_string(j));
  return AttributionMatrix(std::move(ids), std::move(names), values);
}

/// Labels 0..groups-1 with every group non-empty.
inline std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int groups) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(groups));
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

inline Partition random_partition(std::mt19937_64& rng, const Matrix& data, int groups) {
  return Partition::from_labels(random_labels(rng, static_cast<std::size_t>(data.rows()), groups), data,
                                Provenance::algorithmic);
}

inline Selection random_selection(std::mt19937_64& rng, std::size_t n, double p = 0.3) {
  std::bernoulli_distribution pick(p);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i)
    if (pick(rng)) idx.push_back(i);
  return Selection::from_sorted(std::move(idx), n);
}

/// Random mass vector summing to one.
inline std::vector<double> random_mass(std::mt19937_64& rng, std::size_t bins) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> mass(bins);
  for (auto& v : mass) v = u(rng) < 0.25 ? 0.0 : u(rng);
  if (std::accumulate(mass.begin(), mass.end(), 0.0) == 0.0) mass[0] = 1.0;
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (auto& v : mass) v /= total;
  return mass;
}

inline Histogram make_histogram(std::vector<double> mass, double lo, double width) {
  Histogram h;
  h.bin_width = width;
  for (std::size_t i = 0; i <= mass.size(); ++i) h.bin_edges.push_back(lo + width * static_cast<double>(i));
  h.mass = std::move(mass);
  return h;
}

/// Optimal transport between two equal-mass distributions on the same ordered
/// bins. For convex ground cost on a line the monotone (north-west corner)
/// plan solves the transport LP exactly.
inline double transport_oracle(const std::vector<double>& a, const std::vector<double>& b, double width) {
  std::vector<double> supply = a, demand = b;
  std::size_t i = 0, j = 0;
  double cost = 0.0;
  while (i < supply.size() && j < demand.size()) {
    const double moved = std::min(supply[i], demand[j]);
    cost += moved * width * std::abs(static_cast<double>(i) - static_cast<double>(j));
    supply[i] -= moved;
    demand[j] -= moved;
    if (supply[i] <= 1e-15) ++i;
    if (demand[j] <= 1e-15) ++j;
  }
  return cost;
}

/// Fraction of pairs on which two labelings agree, by enumeration.
inline double rand_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t agree = 0, pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      ++pairs;
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
    }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

/// Exhaustive medoid: argmin of summed distances, ties to the smaller index.
inline std::size_t medoid_oracle(const Matrix& data, const std::vector<std::size_t>& members) {
  std::vector<double> sums;
  for (auto i : members) {
    double sum = 0.0;
    for (auto j : members) sum += (data.row(static_cast<Eigen::Index>(i)) - data.row(static_cast<Eigen::Index>(j))).norm();
    sums.push_back(sum);
  }
  const double lowest = *std::min_element(sums.begin(), sums.end());
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t a = 0; a < members.size(); ++a) {
    if (sums[a] <= lowest + 1e-12 * std::max(lowest, 1.0)) best = std::min(best, members[a]);
  }
  return best;
}

inline Matrix distance_oracle(const Matrix& x) {
  Matrix d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      d(i, j) = std::sqrt(s);
    }
  return d;
}

/// Mean of the listed rows, or zeros when empty.
inline std::vector<double> naive_mean(const Matrix& x, const std::vector<std::size_t>& rows) {
  std::vector<double> mean(static_cast<std::size_t>(x.cols()), 0.0);
  if (rows.empty()) return mean;
  for (auto r : rows)
    for (Eigen::Index c = 0; c < x.cols(); ++c) mean[static_cast<std::size_t>(c)] += x(static_cast<Eigen::Index>(r), c);
  for (auto& v : mean) v /= static_cast<double>(rows.size());
  return mean;
}

/// Every instance carries one label, ids are contiguous, counts add up and
/// medoids belong to their groups.
inline bool disjoint_cover(const Partition& p, std::size_t n) {
  if (p.size() != n) return false;
  std::size_t total = 0;
  for (std::size_t g = 0; g < p.group_count(); ++g) {
    const auto& info = p.groups()[g];
    if (info.group_id != static_cast<int>(g)) return false;
    const auto members = p.members(info.group_id);
    if (members.size() != info.member_count || members.empty()) return false;
    if (p.labels()[info.medoid_index] != info.group_id) return false;
    total += info.member_count;
  }
  for (int label : p.labels())
    if (label < 0 || label >= static_cast<int>(p.group_count())) return false;
  return total == n;
}

}  // namespace subplex::testing
