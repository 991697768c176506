#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace ssvdd;
using ssvdd::testing::random_matrix;

TEST(RbfKernel, DirectSubstitution) {
  Matrix x(1, 3);
  const double sigma = 0.7;
  x << 0.0, 0.0, std::sqrt(2.0) * sigma;
  const Matrix k = rbf_kernel(x, sigma);
  EXPECT_EQ(k(0, 1), 1.0);
  EXPECT_NEAR(k(0, 2), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(k(0, 2), 0.367879, 1e-6);
  EXPECT_EQ(k, k.transpose());
  EXPECT_EQ(k.diagonal(), Vector::Ones(3));
}

TEST(RbfKernel, WideKernelIsNearlyConstant) {
  const Matrix k = rbf_kernel(random_matrix(3, 20, 1), 1e6);
  EXPECT_LT((k - Matrix::Ones(20, 20)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RbfKernel, RejectsNonPositiveSigma) {
  try {
    rbf_kernel(random_matrix(2, 3, 1), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveSigma);
  }
  EXPECT_THROW(rbf_kernel(random_matrix(2, 3, 1), -1.0), Error);
}

TEST(CenterKernel, Properties) {
  EXPECT_LT(center_kernel(Matrix::Ones(5, 5)).cwiseAbs().maxCoeff(), 1e-15);
  const Matrix kh = center_kernel(rbf_kernel(random_matrix(4, 30, 2), 1.0));
  EXPECT_LT(kh.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(kh.colwise().sum().cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((center_kernel(kh) - kh).cwiseAbs().maxCoeff(), 1e-12);

  const Index n = 30;
  const Matrix j = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
  const Matrix k = rbf_kernel(random_matrix(4, n, 2), 1.0);
  EXPECT_LT((center_kernel(k) - j * k * j).cwiseAbs().maxCoeff(), 1e-12);

  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 2) = 0.5;
  EXPECT_THROW(center_kernel(asym), Error);
}

TEST(NptFit, TwoPointHandEigendecomposition) {
  const double c = 0.3;
  Matrix kh(2, 2);
  kh << c, -c, -c, c;
  const NptBasis b = npt_fit(kh);
  ASSERT_EQ(b.rank(), 1);
  EXPECT_NEAR(b.eigvals_r(0), 2 * c, 1e-15);
  EXPECT_EQ(b.Phi.cols(), 2);
  EXPECT_LT((b.Phi.transpose() * b.Phi - kh).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NptFit, ReconstructsCenteredKernel) {
  std::uint64_t seed = 10;
  for (Index n : {5, 20, 60, 100}) {
    for (double sigma : {1e-1, 1.0, 1e1, 1e2, 1e3}) {
      const Matrix x = random_matrix(4, n, seed++);
      const NptBasis b = npt_fit_data(x, sigma);
      const Matrix kh = center_kernel(rbf_kernel(x, sigma));
      EXPECT_LE((b.Phi.transpose() * b.Phi - kh).norm(), 1e-8 * kh.norm()) << "n=" << n << " sigma=" << sigma;
      EXPECT_GT(b.eigvals_r.minCoeff(), 0.0);
      EXPECT_LE(b.rank(), n - 1);
    }
  }
}

TEST(NptFit, DuplicatePointsReduceRank) {
  Matrix x = random_matrix(3, 6, 7);
  x.col(3) = x.col(0);
  x.col(4) = x.col(1);
  const NptBasis b = npt_fit_data(x, 1.0);
  EXPECT_LE(b.rank(), 3);
}

TEST(NptFit, ConstantKernelIsRejected) {
  try {
    npt_fit(Matrix::Zero(4, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroKernel);
  }
}

TEST(NptMapTest, TrainingPointsReproduceTheirFeatures) {
  std::uint64_t seed = 40;
  for (Index n : {8, 40, 100}) {
    for (double sigma : {1e-1, 1.0, 1e1, 1e2, 1e3}) {
      const Matrix x = random_matrix(5, n, seed++);
      const NptBasis b = npt_fit_data(x, sigma);
      const Matrix mapped = npt_map_test(x, b);
      EXPECT_LT((mapped - b.Phi).cwiseAbs().maxCoeff(), 1e-6) << "n=" << n << " sigma=" << sigma;
      const Vector one = npt_map_test_point(x.col(2), b);
      EXPECT_LT((one - b.Phi.col(2)).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(NptMapTest, CenteredOutAndDeterministic) {
  // Identical training points: every centered quantity vanishes. Build the
  // basis by hand since the centered kernel itself is zero.
  NptBasis b;
  b.train_X = Matrix::Ones(2, 4);
  b.K_train = rbf_kernel(b.train_X, 1.0);
  b.sigma = 1.0;
  b.U_r = Matrix::Constant(4, 1, 0.5);
  b.eigvals_r = Vector::Ones(1);
  b.Phi = Matrix::Zero(1, 4);
  EXPECT_LT(npt_map_test_point(Vector::Ones(2), b).cwiseAbs().maxCoeff(), 1e-15);

  const Matrix x = random_matrix(3, 15, 3);
  const NptBasis basis = npt_fit_data(x, 1.0);
  const Matrix probes = random_matrix(3, 5, 4);
  const Matrix a1 = npt_map_test(probes, basis);
  const Matrix a2 = npt_map_test(probes, basis);
  EXPECT_TRUE(a1.allFinite());
  EXPECT_EQ(a1, a2);
  EXPECT_THROW(npt_map_test(random_matrix(4, 2, 1), basis), Error);
  EXPECT_EQ(npt_map_test(Matrix(3, 0), basis).cols(), 0);
}
