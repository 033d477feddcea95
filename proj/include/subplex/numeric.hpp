#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "subplex/matrix.hpp"

namespace subplex {

/// Principal-component scores.
struct ReducedMatrix {
  Matrix values;
  /// Fraction of total variance per component, non-increasing.
  std::vector<double> explained_variance_ratio;
};

struct PcaOptions {
  /// Seed of the Gaussian start block used by the truncated solver.
  std::uint64_t seed = 42;
  /// Gram-matrix products beyond the first; the Krylov space holds
  /// krylov_iterations + 1 blocks.
  std::size_t krylov_iterations = 6;
  /// Minimum columns per Krylov block.
  std::size_t block_size = 4;
  /// The Krylov space spans at least n_components + oversampling directions.
  std::size_t oversampling = 10;
};

/// Projects rows onto the leading principal directions of the column-centred
/// data. Each component's largest-magnitude loading is made positive.
///
/// Small or square-ish inputs use a full thin SVD. When the requested rank is
/// much smaller than min(n, m) the leading directions come from a randomized
/// block Krylov space followed by an exact SVD of the data restricted to it.
ReducedMatrix pca_fit_transform(const Matrix& data, std::size_t n_components, const PcaOptions& options = {});

/// Euclidean distance matrix between rows.
Matrix pairwise_distances(const Matrix& data);

struct EigenPairs {
  /// Descending.
  Vector values;
  /// One eigenvector per column.
  Eigen::MatrixXd vectors;
};

/// Largest-algebraic `count` eigenpairs of a symmetric matrix. Dense
/// decomposition for small inputs, Lanczos with full reorthogonalisation
/// otherwise.
EigenPairs top_eigenpairs(const Eigen::MatrixXd& symmetric, std::size_t count);

/// Classical (Torgerson) scaling of a symmetric, zero-diagonal, non-negative
/// distance matrix. Negative eigenvalues are clamped to zero and the output is
/// centred at the origin.
Matrix classical_mds(const Matrix& distances, std::size_t dim = 2);

/// Uniform-bin histogram. `mass` holds per-bin weight.
struct Histogram {
  std::vector<double> bin_edges;
  std::vector<double> mass;
  double bin_width = 0.0;

  std::size_t bins() const noexcept { return mass.size(); }
};

/// Each value adds 1/total_weight to its bin. Values at `hi` land in the last
/// bin and values outside [lo, hi] are clamped to the boundary bins.
Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins, double total_weight);

/// Earth mover's distance between histograms on identical edges, computed as
/// bin_width * sum |CDF_a - CDF_b|.
double emd_1d(const Histogram& a, const Histogram& b);

/// Fraction of instance pairs on which two labelings agree.
double rand_index(std::span<const int> a, std::span<const int> b);

/// Mean silhouette coefficient of `points` under `labels` (Euclidean).
/// Members of singleton clusters contribute 0.
double silhouette(const Matrix& points, std::span<const int> labels);

}  // namespace subplex
