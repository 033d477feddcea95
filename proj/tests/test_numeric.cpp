#include <gtest/gtest.h>

#include "subplex/errors.hpp"
#include "subplex/numeric.hpp"
#include "support.hpp"

using namespace subplex;
using namespace subplex::testing;

namespace {

double total_variance(const Matrix& x) {
  const RowVector mean = x.colwise().mean();
  return (x.rowwise() - mean).squaredNorm();
}

}  // namespace

TEST(Pca, SingleAxisVarianceHasRatioOne) {
  Matrix x(6, 3);
  x.setZero();
  for (Eigen::Index i = 0; i < 6; ++i) x(i, 0) = static_cast<double>(i);
  const auto r = pca_fit_transform(x, 2);
  EXPECT_NEAR(r.explained_variance_ratio[0], 1.0, 1e-12);
  EXPECT_NEAR(r.explained_variance_ratio[1], 0.0, 1e-12);
}

TEST(Pca, ZeroVarianceGivesZeros) {
  Matrix x = Matrix::Constant(5, 3, 2.5);
  const auto r = pca_fit_transform(x, 2);
  EXPECT_TRUE(r.values.isZero(0.0));
  EXPECT_EQ(r.explained_variance_ratio, (std::vector<double>{0.0, 0.0}));
}

TEST(Pca, ComponentCountIsValidated) {
  std::mt19937_64 rng(1);
  const auto x = random_matrix(rng, 5, 3);
  EXPECT_THROW(pca_fit_transform(x, 0), RangeError);
  EXPECT_THROW(pca_fit_transform(x, 4), RangeError);
  EXPECT_THROW(pca_fit_transform(random_matrix(rng, 1, 3), 1), Error);
}

TEST(Pca, LosslessCaseKeepsDistances) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial), m = 2 + static_cast<std::size_t>(trial % 4);
    const auto x = random_matrix(rng, n, m);
    const auto r = pca_fit_transform(x, std::min(n, m));
    EXPECT_TRUE((distance_oracle(r.values) - distance_oracle(x)).cwiseAbs().maxCoeff() < 1e-8);
    double sum = 0.0;
    for (double v : r.explained_variance_ratio) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-10);
  }
}

TEST(Pca, ScoresAreCenteredAndRatiosOrdered) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_matrix(rng, 40, 12, 0.0, 5.0);
    const auto r = pca_fit_transform(x, 5);
    const RowVector mean = r.values.colwise().mean();
    EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-9 * (1.0 + r.values.cwiseAbs().maxCoeff()));
    double sum = 0.0;
    for (std::size_t c = 0; c < r.explained_variance_ratio.size(); ++c) {
      EXPECT_GE(r.explained_variance_ratio[c], 0.0);
      EXPECT_LE(r.explained_variance_ratio[c], 1.0);
      if (c > 0) {
        EXPECT_LE(r.explained_variance_ratio[c], r.explained_variance_ratio[c - 1] + 1e-12);
      }
      sum += r.explained_variance_ratio[c];
      const double var = r.values.col(static_cast<Eigen::Index>(c)).squaredNorm();
      EXPECT_NEAR(var / total_variance(x), r.explained_variance_ratio[c], 1e-9);
    }
    EXPECT_LE(sum, 1.0 + 1e-12);
  }
}

TEST(Pca, RatioSumsToOneAtRank) {
  std::mt19937_64 rng(4);
  const auto basis = random_matrix(rng, 3, 20);
  const auto coeff = random_matrix(rng, 30, 3);
  const Matrix x = coeff * basis;
  const auto r = pca_fit_transform(x, 4);
  EXPECT_NEAR(r.explained_variance_ratio[0] + r.explained_variance_ratio[1] + r.explained_variance_ratio[2] +
                  r.explained_variance_ratio[3],
              1.0, 1e-10);
  EXPECT_NEAR(r.explained_variance_ratio[3], 0.0, 1e-10);
}

TEST(Pca, DeterministicAndSignFixed) {
  std::mt19937_64 rng(5);
  const auto x = random_matrix(rng, 50, 8);
  const auto a = pca_fit_transform(x, 3);
  const auto b = pca_fit_transform(x, 3);
  EXPECT_TRUE((a.values.array() == b.values.array()).all());
  // Negating the data negates the raw loadings; the sign rule restores them, so
  // the scores of -x are exactly the negated scores of x.
  const auto c = pca_fit_transform(-x, 3);
  EXPECT_LT((a.values + c.values).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Pca, TruncatedSolverMatchesExactOnWideData) {
  std::mt19937_64 rng(6);
  // Low-rank signal plus small noise; min(n, m) > 200 triggers the Krylov path.
  const auto left = random_matrix(rng, 300, 6);
  const auto right = random_matrix(rng, 6, 900);
  std::vector<double> scale{40, 25, 16, 9, 4, 2};
  Matrix signal = Matrix::Zero(300, 900);
  for (Eigen::Index c = 0; c < 6; ++c) signal += scale[static_cast<std::size_t>(c)] * left.col(c) * right.row(c);
  const Matrix x = signal + 0.05 * random_matrix(rng, 300, 900);
  const auto fast = pca_fit_transform(x, 4);

  // Exact oracle: eigen-decomposition of the centred Gram matrix on the short side.
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd gram = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double total = total_variance(x);
  for (int c = 0; c < 4; ++c) {
    const double lambda = eig.eigenvalues()(299 - c);
    EXPECT_NEAR(fast.explained_variance_ratio[static_cast<std::size_t>(c)], lambda / total, 1e-6);
    const Eigen::VectorXd u = eig.eigenvectors().col(299 - c);
    const Eigen::VectorXd score = fast.values.col(c);
    EXPECT_NEAR(std::abs(u.dot(score.normalized())), 1.0, 1e-6);
  }
}

TEST(PairwiseDistances, MatchesOracle) {
  std::mt19937_64 rng(7);
  const auto x = random_matrix(rng, 25, 6);
  EXPECT_LT((pairwise_distances(x) - distance_oracle(x)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mds, CollinearPoints) {
  Matrix d(3, 3);
  d << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  const auto y = classical_mds(d);
  EXPECT_LT((distance_oracle(y) - d).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mds, EquilateralTriangle) {
  Matrix d = Matrix::Ones(3, 3);
  d.diagonal().setZero();
  const auto y = classical_mds(d);
  EXPECT_LT((distance_oracle(y) - d).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(y.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mds, ReproducesPlanarConfigurations) {
  std::mt19937_64 rng(8);
  for (std::size_t n : {10, 40, 300}) {
    const auto pts = random_matrix(rng, n, 2, -5, 5);
    const auto d = distance_oracle(pts);
    const auto y = classical_mds(d);
    EXPECT_LT((distance_oracle(y) - d).cwiseAbs().maxCoeff(), 1e-6) << n;
  }
}

TEST(Mds, RejectsInvalidInput) {
  Matrix d(2, 2);
  d << 0, 1, 2, 0;
  EXPECT_THROW(classical_mds(d), ValidationError);
  d << 0, -1, -1, 0;
  EXPECT_THROW(classical_mds(d), ValidationError);
  EXPECT_THROW(classical_mds(Matrix(0, 0)), ValidationError);
}

TEST(Mds, SinglePointAtOrigin) {
  const auto y = classical_mds(Matrix::Zero(1, 1));
  EXPECT_EQ(y.rows(), 1);
  EXPECT_TRUE(y.isZero(0.0));
}

TEST(TopEigenpairs, LanczosMatchesDense) {
  std::mt19937_64 rng(9);
  const auto a = random_matrix(rng, 400, 400);
  const Eigen::MatrixXd sym = a.transpose() * a;
  const auto top = top_eigenpairs(sym, 3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(top.values(c), eig.eigenvalues()(399 - c), 1e-8 * eig.eigenvalues()(399));
    EXPECT_NEAR(std::abs(top.vectors.col(c).dot(eig.eigenvectors().col(399 - c))), 1.0, 1e-8);
  }
}

TEST(Histogram, MassSumsToOne) {
  const std::vector<double> v{0.1, 0.2, 0.3, 0.4, 0.5};
  const auto h = histogram(v, 0.0, 1.0, 4, 5);
  double total = 0.0;
  for (double m : h.mass) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (std::size_t i = 1; i < h.bin_edges.size(); ++i) EXPECT_GT(h.bin_edges[i], h.bin_edges[i - 1]);
}

TEST(Histogram, UpperEdgeAndClamping) {
  const std::vector<double> v{1.0, -3.0, 7.0};
  const auto h = histogram(v, 0.0, 1.0, 4, 3);
  EXPECT_NEAR(h.mass[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(h.mass[3], 2.0 / 3.0, 1e-15);
}

TEST(Histogram, Validation) {
  const std::vector<double> v{0.5};
  EXPECT_THROW(histogram(v, 1.0, 1.0, 4, 1), RangeError);
  EXPECT_THROW(histogram(v, 0.0, 1.0, 0, 1), Error);
}

TEST(Histogram, UniformSamples) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(10000);
  for (auto& x : v) x = u(rng);
  const auto h = histogram(v, 0.0, 1.0, 10, 10000);
  for (double m : h.mass) EXPECT_NEAR(m, 0.1, 0.02);
}

TEST(Emd, Basics) {
  const auto a = make_histogram({1.0, 0.0}, 0.0, 1.0);
  const auto b = make_histogram({0.0, 1.0}, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(emd_1d(a, a), 0.0);
  EXPECT_DOUBLE_EQ(emd_1d(a, b), 1.0);
  const auto shifted = make_histogram({1.0, 0.0}, 0.5, 1.0);
  EXPECT_THROW(emd_1d(a, shifted), ValidationError);
}

TEST(Emd, MatchesTransportOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t bins = 2 + static_cast<std::size_t>(trial % 15);
    const double width = 0.1 + 0.05 * (trial % 7);
    const auto ma = random_mass(rng, bins), mb = random_mass(rng, bins);
    const double got = emd_1d(make_histogram(ma, -1.0, width), make_histogram(mb, -1.0, width));
    EXPECT_NEAR(got, transport_oracle(ma, mb, width), 1e-9);
  }
}

TEST(Emd, MetricAxioms) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = make_histogram(random_mass(rng, 8), 0.0, 0.25);
    const auto b = make_histogram(random_mass(rng, 8), 0.0, 0.25);
    const auto c = make_histogram(random_mass(rng, 8), 0.0, 0.25);
    const double ab = emd_1d(a, b), ba = emd_1d(b, a), bc = emd_1d(b, c), ac = emd_1d(a, c);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_LE(ac, ab + bc + 1e-9);
    EXPECT_EQ(emd_1d(a, a), 0.0);
  }
}

TEST(RandIndex, Examples) {
  const std::vector<int> a{0, 0, 1, 1}, b{1, 1, 0, 0}, c{0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(rand_index(a, a), 1.0);
  EXPECT_DOUBLE_EQ(rand_index(a, b), 1.0);
  EXPECT_NEAR(rand_index(a, c), 1.0 / 3.0, 1e-15);
  const std::vector<int> shorter{0, 1};
  EXPECT_THROW(rand_index(a, shorter), ValidationError);
}

TEST(RandIndex, MatchesPairCountingExhaustively) {
  // Every labeling pair over n = 5 with up to 3 labels, plus random n <= 8.
  std::vector<int> a(5), b(5);
  for (int code = 0; code < 243 * 243; code += 37) {
    int ca = code / 243, cb = code % 243;
    for (int i = 0; i < 5; ++i) {
      a[static_cast<std::size_t>(i)] = ca % 3;
      b[static_cast<std::size_t>(i)] = cb % 3;
      ca /= 3;
      cb /= 3;
    }
    EXPECT_NEAR(rand_index(a, b), rand_oracle(a, b), 1e-15);
  }
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    std::uniform_int_distribution<int> lab(0, 3);
    std::vector<int> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = lab(rng);
      y[i] = lab(rng);
    }
    EXPECT_NEAR(rand_index(x, y), rand_oracle(x, y), 1e-15);
  }
}

TEST(Silhouette, SeparatedAndSingletons) {
  Matrix pts(4, 1);
  pts << 0, 0.1, 10, 10.1;
  const std::vector<int> labels{0, 0, 1, 1};
  EXPECT_GT(silhouette(pts, labels), 0.98);
  const std::vector<int> single{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(silhouette(pts, single), 0.0);
}
