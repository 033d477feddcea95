#include "subplex/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <utility>

#include "subplex/errors.hpp"

namespace subplex {

namespace {

// Below this size the dense symmetric eigensolver is cheap enough.
constexpr Eigen::Index kDenseEigenLimit = 64;

void make_largest_entry_positive(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& block) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(block);
  return qr.householderQ() * Eigen::MatrixXd::Identity(block.rows(), block.cols());
}

}  // namespace

ReducedMatrix pca_fit_transform(const Matrix& data, std::size_t n_components, const PcaOptions& options) {
  const auto n = static_cast<std::size_t>(data.rows());
  const auto m = static_cast<std::size_t>(data.cols());
  if (n < 2) throw ValidationError("PCA needs at least two rows");
  if (n_components < 1 || n_components > std::min(n, m)) {
    throw RangeError("n_components must be in [1, " + std::to_string(std::min(n, m)) + "], got " +
                     std::to_string(n_components));
  }
  const auto p = static_cast<Eigen::Index>(n_components);

  // Centring stays implicit so wide inputs are never copied.
  const Eigen::RowVectorXd mean = data.colwise().mean();
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) total += (data.row(i) - mean).squaredNorm();

  ReducedMatrix out;
  out.values = Matrix::Zero(data.rows(), p);
  out.explained_variance_ratio.assign(n_components, 0.0);
  if (total == 0.0) return out;

  const std::size_t depth = options.krylov_iterations + 1;
  const std::size_t wanted = n_components + options.oversampling;
  const std::size_t block = std::max(options.block_size, (wanted + depth - 1) / depth);
  const std::size_t krylov_dim = block * depth;
  const bool truncated = std::min(n, m) > 200 && 2 * krylov_dim <= std::min(n, m);

  Eigen::MatrixXd scores;    // n x p
  Eigen::VectorXd singular;  // p
  Eigen::MatrixXd loadings;  // m x p
  if (!truncated) {
    Eigen::MatrixXd centered = data;
    centered.rowwise() -= mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    singular = svd.singularValues().head(p);
    scores = svd.matrixU().leftCols(p) * singular.asDiagonal();
    loadings = svd.matrixV().leftCols(p);
  } else {
    // Block Krylov space [G w, G^2 w, ...] of the centred Gram matrix G = Xc^T Xc.
    // One streaming pass over the rows per block keeps the wide matrix in cache.
    constexpr Eigen::Index kChunk = 16;
    auto gram_apply = [&](const Eigen::MatrixXd& v) {
      const Eigen::RowVectorXd shift = mean * v;
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(v.rows(), v.cols());
      Eigen::RowVectorXd weight_sum = Eigen::RowVectorXd::Zero(v.cols());
      Eigen::MatrixXd t;
      for (Eigen::Index start = 0; start < data.rows(); start += kChunk) {
        const auto rows = std::min(kChunk, data.rows() - start);
        const auto chunk = data.middleRows(start, rows);
        t.noalias() = chunk * v;
        t.rowwise() -= shift;
        acc.noalias() += chunk.transpose() * t;
        weight_sum += t.colwise().sum();
      }
      acc.noalias() -= mean.transpose() * weight_sum;
      return acc;
    };

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto b = static_cast<Eigen::Index>(block);
    Eigen::MatrixXd v(data.cols(), b);
    for (Eigen::Index j = 0; j < b; ++j) {
      for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, j) = gauss(rng);
    }
    v = orthonormal_basis(v);
    Eigen::MatrixXd krylov(data.cols(), static_cast<Eigen::Index>(krylov_dim));
    for (std::size_t it = 0; it < depth; ++it) {
      v = orthonormal_basis(gram_apply(v));
      krylov.middleCols(static_cast<Eigen::Index>(it) * b, b) = v;
    }
    const Eigen::MatrixXd basis = orthonormal_basis(krylov);
    Eigen::MatrixXd restricted = data * basis;  // Xc Q, n x krylov_dim
    restricted.rowwise() -= mean * basis;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(restricted, Eigen::ComputeThinU | Eigen::ComputeThinV);
    singular = svd.singularValues().head(p);
    scores = svd.matrixU().leftCols(p) * singular.asDiagonal();
    loadings = basis * svd.matrixV().leftCols(p);
  }

  for (Eigen::Index c = 0; c < p; ++c) {
    Eigen::Index arg = 0;
    loadings.col(c).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, c) < 0.0) scores.col(c) = -scores.col(c);
    out.explained_variance_ratio[static_cast<std::size_t>(c)] = std::clamp(singular(c) * singular(c) / total, 0.0, 1.0);
  }
  out.values = scores;
  return out;
}

Matrix pairwise_distances(const Matrix& data) {
  const auto n = data.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (data.row(i) - data.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

EigenPairs top_eigenpairs(const Eigen::MatrixXd& a, std::size_t count) {
  const auto n = a.rows();
  const auto want = static_cast<Eigen::Index>(std::min<std::size_t>(count, static_cast<std::size_t>(n)));
  EigenPairs out;
  out.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
  out.vectors = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(count));
  if (n == 0 || want == 0) return out;

  if (n <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    for (Eigen::Index c = 0; c < want; ++c) {
      out.values(c) = es.eigenvalues()(n - 1 - c);
      out.vectors.col(c) = es.eigenvectors().col(n - 1 - c);
    }
    return out;
  }

  // Lanczos with full reorthogonalisation.
  const Eigen::Index max_steps = std::min<Eigen::Index>(n, std::max<Eigen::Index>(300, 4 * want + 40));
  Eigen::MatrixXd basis(n, max_steps);
  std::vector<double> alpha;
  std::vector<double> beta;

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
  basis.col(0) = v / v.norm();

  const double scale_hint = a.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::MatrixXd ritz_vectors;
  Eigen::VectorXd ritz_values;
  Eigen::Index steps = 0;

  for (Eigen::Index j = 0; j < max_steps; ++j) {
    Eigen::VectorXd w = a * basis.col(j);
    alpha.push_back(basis.col(j).dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      const auto prefix = basis.leftCols(j + 1);
      w -= prefix * (prefix.transpose() * w);
    }
    const double b = w.norm();
    steps = j + 1;

    const bool exhausted = b <= 1e-12 * std::max(scale_hint, 1e-300) || steps == max_steps;
    if (exhausted || (steps >= want && steps % 5 == 0)) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
      for (Eigen::Index i = 0; i < steps; ++i) {
        t(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < steps) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      ritz_values = es.eigenvalues();
      ritz_vectors = es.eigenvectors();
      bool converged = true;
      const double tol = 1e-10 * std::max(ritz_values.cwiseAbs().maxCoeff(), 1e-300);
      for (Eigen::Index c = 0; c < std::min(want, steps); ++c) {
        if (std::abs(b * ritz_vectors(steps - 1, steps - 1 - c)) > tol) converged = false;
      }
      if (exhausted || converged) break;
    }
    beta.push_back(b);
    basis.col(j + 1) = w / b;
  }

  const auto found = std::min(want, steps);
  const auto prefix = basis.leftCols(steps);
  for (Eigen::Index c = 0; c < found; ++c) {
    out.values(c) = ritz_values(steps - 1 - c);
    Eigen::VectorXd vec = prefix * ritz_vectors.col(steps - 1 - c);
    out.vectors.col(c) = vec / vec.norm();
  }
  return out;
}

Matrix classical_mds(const Matrix& distances, std::size_t dim) {
  const auto k = distances.rows();
  if (distances.cols() != k) throw ValidationError("distance matrix must be square");
  if (k == 0) throw ValidationError("distance matrix must not be empty");
  if (dim < 1) throw RangeError("dim must be at least 1");
  if (!distances.allFinite()) throw ValidationError("distance matrix must be finite");
  const double scale = distances.cwiseAbs().maxCoeff();
  const double sym_tol = 1e-12 * std::max(scale, 1.0);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(distances(i, i)) > sym_tol) throw ValidationError("distance matrix must have a zero diagonal");
    for (Eigen::Index j = 0; j < k; ++j) {
      if (distances(i, j) < 0.0) throw ValidationError("distances must be non-negative");
      if (std::abs(distances(i, j) - distances(j, i)) > sym_tol) {
        throw ValidationError("distance matrix must be symmetric");
      }
    }
  }

  // B = -1/2 J D^2 J
  Eigen::MatrixXd b = distances.cwiseProduct(distances);
  const Eigen::VectorXd row_mean = b.rowwise().mean();
  const Eigen::RowVectorXd col_mean = b.colwise().mean();
  const double grand = b.mean();
  b.colwise() -= row_mean;
  b.rowwise() -= col_mean;
  b.array() += grand;
  b *= -0.5;
  b = 0.5 * (b + b.transpose()).eval();

  const auto pairs = top_eigenpairs(b, dim);
  Matrix coords = Matrix::Zero(k, static_cast<Eigen::Index>(dim));
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(dim); ++c) {
    const double lambda = std::max(pairs.values(c), 0.0);
    if (lambda == 0.0) continue;
    Eigen::VectorXd v = pairs.vectors.col(c);
    make_largest_entry_positive(v);
    coords.col(c) = v * std::sqrt(lambda);
  }
  coords.rowwise() -= coords.colwise().mean();
  return coords;
}

Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins, double total_weight) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw RangeError("histogram range needs lo < hi");
  if (bins < 1) throw RangeError("histogram needs at least one bin");
  if (!(total_weight >= std::max<double>(1.0, static_cast<double>(values.size())))) {
    throw ValidationError("total_weight must be at least max(1, number of values)");
  }

  Histogram h;
  h.bin_width = (hi - lo) / static_cast<double>(bins);
  h.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i < bins; ++i) h.bin_edges[i] = lo + static_cast<double>(i) * h.bin_width;
  h.bin_edges[bins] = hi;
  h.mass.assign(bins, 0.0);

  const double unit = 1.0 / total_weight;
  for (double v : values) {
    std::size_t bin = 0;
    if (v >= hi) {
      bin = bins - 1;
    } else if (v > lo) {
      bin = std::min(bins - 1, static_cast<std::size_t>((v - lo) / h.bin_width));
    }
    h.mass[bin] += unit;
  }
  return h;
}

double emd_1d(const Histogram& a, const Histogram& b) {
  if (a.bin_edges != b.bin_edges || a.mass.size() != b.mass.size()) {
    throw ValidationError("EMD needs histograms on identical bin edges");
  }
  double cdf_a = 0.0;
  double cdf_b = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.mass.size(); ++i) {
    cdf_a += a.mass[i];
    cdf_b += b.mass[i];
    total += std::abs(cdf_a - cdf_b);
  }
  return a.bin_width * total;
}

double rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("rand_index needs labelings of equal length");
  if (a.size() < 2) throw ValidationError("rand_index needs at least two instances");

  std::map<std::pair<int, int>, std::uint64_t> joint;
  std::map<int, std::uint64_t> count_a;
  std::map<int, std::uint64_t> count_b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++count_a[a[i]];
    ++count_b[b[i]];
  }
  auto pairs = [](std::uint64_t c) { return c * (c - 1) / 2; };
  std::uint64_t same_both = 0;
  std::uint64_t same_a = 0;
  std::uint64_t same_b = 0;
  for (const auto& [key, c] : joint) same_both += pairs(c);
  for (const auto& [key, c] : count_a) same_a += pairs(c);
  for (const auto& [key, c] : count_b) same_b += pairs(c);

  const std::uint64_t total = pairs(a.size());
  // agreements = together in both + apart in both
  const std::uint64_t apart_both = total - same_a - same_b + same_both;
  return static_cast<double>(same_both + apart_both) / static_cast<double>(total);
}

double silhouette(const Matrix& points, std::span<const int> labels) {
  const auto n = points.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw ValidationError("silhouette label count mismatch");

  std::map<int, int> index_of;
  for (int l : labels) index_of.emplace(l, 0);
  if (index_of.size() < 2) throw ValidationError("silhouette needs at least two clusters");
  int next = 0;
  for (auto& [label, idx] : index_of) idx = next++;

  std::vector<int> dense(labels.size());
  std::vector<double> sizes(index_of.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    dense[i] = index_of[labels[i]];
    sizes[static_cast<std::size_t>(dense[i])] += 1.0;
  }

  double sum = 0.0;
  std::vector<double> dist_sum(index_of.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      dist_sum[static_cast<std::size_t>(dense[static_cast<std::size_t>(j)])] += (points.row(i) - points.row(j)).norm();
    }
    const auto own = static_cast<std::size_t>(dense[static_cast<std::size_t>(i)]);
    if (sizes[own] <= 1.0) continue;
    const double a_i = dist_sum[own] / (sizes[own] - 1.0);
    double b_i = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (c != own && sizes[c] > 0.0) b_i = std::min(b_i, dist_sum[c] / sizes[c]);
    }
    const double denom = std::max(a_i, b_i);
    if (denom > 0.0) sum += (b_i - a_i) / denom;
  }
  return sum / static_cast<double>(n);
}

}  // namespace subplex
