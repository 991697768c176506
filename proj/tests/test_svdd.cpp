#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"

using namespace ssvdd;
using ssvdd::testing::brute_force_dual;
using ssvdd::testing::random_matrix;

namespace {

Matrix gram_of(const Matrix& y) { return y.transpose() * y; }

void expect_alpha_valid(const AlphaVector& a) {
  EXPECT_NEAR(a.alpha.sum(), 1.0, 1e-8);
  EXPECT_GE(a.alpha.minCoeff(), 0.0);
  EXPECT_LE(a.alpha.maxCoeff(), a.C + 1e-15);
}

}  // namespace

TEST(SolveDual, SinglePoint) {
  const AlphaVector a = solve_dual(Matrix::Constant(1, 1, 4.0), 1.0);
  EXPECT_EQ(a.alpha(0), 1.0);
}

TEST(SolveDual, SymmetricPair) {
  Matrix y(2, 2);
  y << -1, 1, 0, 0;
  const AlphaVector a = solve_dual(gram_of(y), 1.0);
  EXPECT_NEAR(a.alpha(0), 0.5, 1e-12);
  EXPECT_NEAR(a.alpha(1), 0.5, 1e-12);
}

TEST(SolveDual, InfeasibleCIsAnError) {
  try {
    solve_dual(Matrix::Identity(4, 4), 0.2);
    FAIL() << "expected InfeasibleC";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleC);
    EXPECT_NE(std::string(e.what()).find("C < 1/N infeasible"), std::string::npos);
  }
  EXPECT_NO_THROW(solve_dual(Matrix::Identity(4, 4), 0.25));
}

TEST(SolveDual, NotConvergedWhenBudgetTooSmall) {
  const Matrix y = random_matrix(2, 30, 3);
  DualSolverOptions opts;
  opts.max_updates = 1;
  try {
    solve_dual(gram_of(y), 0.1, opts);
    FAIL() << "expected NotConverged";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotConverged);
  }
}

TEST(SolveDual, MatchesExhaustiveGridN4) {
  const Matrix y = random_matrix(2, 4, 2024);
  const Matrix g = gram_of(y);
  const AlphaVector a = solve_dual(g, 0.5);
  expect_alpha_valid(a);
  const auto grid = brute_force_dual(g, 0.5, 1000);
  const double obj = dual_objective(g, a.alpha);
  EXPECT_GE(obj, grid.objective - 1e-5);
  EXPECT_LE(std::abs(obj - grid.objective), 1e-5);
}

TEST(SolveDual, DeterministicAndTranslationInvariant) {
  const Matrix y = random_matrix(3, 25, 17);
  const AlphaVector a1 = solve_dual(gram_of(y), 0.1);
  const AlphaVector a2 = solve_dual(gram_of(y), 0.1);
  EXPECT_EQ(a1.alpha, a2.alpha);

  const Vector t = (Vector(3) << 5, -3, 2).finished();
  const Matrix shifted = y.colwise() + t;
  const AlphaVector b = solve_dual(gram_of(shifted), 0.1);
  EXPECT_LT((a1.alpha - b.alpha).cwiseAbs().maxCoeff(), 1e-6);
  const DataDescription da = describe(a1, y);
  const DataDescription db = describe(b, shifted);
  EXPECT_LT((db.center - da.center - t).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(da.radius_sq, db.radius_sq, 1e-6 * (1 + da.radius_sq));
  // Labels of fresh probes agree.
  const Matrix probes = random_matrix(3, 40, 99, 1.5);
  const auto la = decide_batch(probes, da, y);
  const auto lb = decide_batch(probes.colwise() + t, db, shifted);
  for (std::size_t k = 0; k < la.size(); ++k) {
    if (std::abs(la[k].distance_sq - da.radius_sq) > 1e-5) {
      EXPECT_EQ(la[k].label, lb[k].label);
    }
  }
}

TEST(Describe, TwoPointSymmetry) {
  Matrix y(2, 2);
  y << -1, 1, 0, 0;
  AlphaVector a{(Vector(2) << 0.5, 0.5).finished(), 1.0, 0.0};
  const DataDescription d = describe(a, y);
  EXPECT_NEAR(d.center.norm(), 0.0, 1e-15);
  EXPECT_NEAR(d.radius_sq, 1.0, 1e-15);
  EXPECT_EQ(d.boundary_sv_indices.size(), 2u);

  const Decision far = decide((Vector(2) << 0, 3).finished(), d, y, a);
  EXPECT_NEAR(far.distance_sq, 9.0, 1e-12);
  EXPECT_EQ(far.label, Label::negative);
  const Decision at_center = decide(d.center, d, y, a);
  EXPECT_NEAR(at_center.distance_sq, 0.0, 1e-15);
  EXPECT_EQ(at_center.label, Label::positive);
}

TEST(Describe, SinglePointFallsBackToMaxOverSupportVectors) {
  Matrix y(2, 1);
  y << 3, 4;
  const AlphaVector a = solve_dual(gram_of(y), 1.0);
  const DataDescription d = describe(a, y);
  EXPECT_EQ(d.center, y.col(0));
  EXPECT_EQ(d.radius_sq, 0.0);
  EXPECT_TRUE(d.boundary_sv_indices.empty());
  EXPECT_EQ(d.sv_indices.size(), 1u);
}

TEST(Describe, RejectsAllZeroAlpha) {
  AlphaVector a{Vector::Zero(3), 0.5, 0.0};
  EXPECT_THROW(describe(a, random_matrix(2, 3, 1)), Error);
}

TEST(Describe, KktComplementarityOnGaussianCloud) {
  const Matrix y = random_matrix(2, 20, 31);
  const AlphaVector a = solve_dual(gram_of(y), 0.2);
  expect_alpha_valid(a);
  const DataDescription d = describe(a, y);
  ASSERT_FALSE(d.boundary_sv_indices.empty());
  const double eps = sv_epsilon(a.C);
  const double tol = 1e-6 * (1 + d.radius_sq);
  for (Index i = 0; i < y.cols(); ++i) {
    const double dist = (y.col(i) - d.center).squaredNorm();
    if (a.alpha(i) >= a.C - eps) {
      EXPECT_GE(dist, d.radius_sq - tol) << i;
    }
    if (a.alpha(i) <= eps) {
      EXPECT_LE(dist, d.radius_sq + tol) << i;
    }
  }
  for (Index s : d.boundary_sv_indices) {
    EXPECT_NEAR((y.col(s) - d.center).squaredNorm(), d.radius_sq, 1e-6 * d.radius_sq);
  }
  for (Index s : d.boundary_sv_indices) {
    EXPECT_NE(std::find(d.sv_indices.begin(), d.sv_indices.end(), s), d.sv_indices.end());
  }
  EXPECT_LT((d.center - y * a.alpha).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Decide, ExpansionMatchesDirectDistance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix y = random_matrix(3, 12, seed);
    const AlphaVector a = solve_dual(gram_of(y), 0.3);
    const DataDescription d = describe(a, y);
    const Matrix probes = random_matrix(3, 5, seed + 1000, 2.0);
    const auto batch = decide_batch(probes, d, y);
    for (Index m = 0; m < probes.cols(); ++m) {
      const double direct = (probes.col(m) - d.center).squaredNorm();
      const Decision one = decide(probes.col(m), d, y, a);
      EXPECT_NEAR(one.distance_sq, direct, 1e-10 * std::max(1.0, direct));
      EXPECT_NEAR(batch[static_cast<std::size_t>(m)].distance_sq, direct, 1e-10 * std::max(1.0, direct));
    }
  }
}

TEST(Decide, DimensionMismatch) {
  const Matrix y = random_matrix(2, 3, 1);
  const AlphaVector a = solve_dual(gram_of(y), 1.0);
  const DataDescription d = describe(a, y);
  EXPECT_THROW(decide(Vector::Zero(3), d, y, a), Error);
}

// Gram captured from a training run whose projected targets put four support
// vectors on a nearly flat face. Pair updates alone needed ~39k moves here.
TEST(SolveDual, FlatFaceConvergesWithinBudget) {
  std::ifstream in(std::string(SSVDD_TEST_DATA_DIR) + "/flat_face_gram.txt");
  ASSERT_TRUE(in);
  Index n = 0;
  double c = 0.0;
  in >> n >> c;
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) in >> g(i, j);
  ASSERT_TRUE(in);
  g = 0.5 * (g + g.transpose());
  const AlphaVector a = solve_dual(g, c);
  expect_alpha_valid(a);
  EXPECT_LT(a.updates, n * n);
  EXPECT_LE(kkt_gap(g, a.alpha, c), 1e-10 * std::max(1.0, g.diagonal().maxCoeff()));
}

TEST(SolveDual, LowRankGramsMatchProjectedGradient) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Matrix y = random_matrix(2, 30, seed + 40);
    // Duplicated columns make the optimal face non-unique.
    for (Index i = 0; i < 10; ++i) y.col(i) = y.col(29 - i);
    const Matrix g = gram_of(y);
    const double c = 0.2;
    const AlphaVector a = solve_dual(g, c);
    expect_alpha_valid(a);
    // Projected gradient onto the capped simplex as an independent optimum.
    const auto project = [c](const Vector& v) {
      double lo = v.minCoeff() - c - 1.0;
      double hi = v.maxCoeff() + 1.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((v.array() - mid).max(0.0).min(c).sum() > 1.0 ? lo : hi) = mid;
      }
      return Vector((v.array() - 0.5 * (lo + hi)).max(0.0).min(c));
    };
    Vector x = Vector::Constant(30, 1.0 / 30.0);
    const double step = 1.0 / (2.0 * g.norm());
    for (int it = 0; it < 20000; ++it) x = project(x - step * (2.0 * g * x - Vector(g.diagonal())));
    EXPECT_GE(dual_objective(g, a.alpha), dual_objective(g, x) - 1e-9) << "seed " << seed;
  }
}
