#pragma once

// Test-only helpers: seeded generators and independent reference
// computations (finite differences, exhaustive simplex grid, literal sums).

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ssvdd/ssvdd.hpp"

namespace ssvdd::testing {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_orthonormal_rows(Index d, Index big_d, std::uint64_t seed) {
  return row_normalize_l2(qr_orthonormalize_rows(random_matrix(d, big_d, seed)));
}

inline Matrix random_orthogonal(Index n, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, seed));
  return qr.householderQ() * Matrix::Identity(n, n);
}

/// Point on the probability simplex (normalized exponential draws).
inline Vector random_simplex(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  Vector a(n);
  for (Index i = 0; i < n; ++i) a(i) = expo(rng);
  return a / a.sum();
}

inline double rel_error(const Matrix& got, const Matrix& want) {
  const double denom = std::max(want.norm(), 1e-300);
  return (got - want).norm() / denom;
}

/// Central differences of a scalar function of a matrix argument.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& at, double h) {
  Matrix g(at.rows(), at.cols());
  for (Index i = 0; i < at.rows(); ++i) {
    for (Index j = 0; j < at.cols(); ++j) {
      Matrix plus = at;
      Matrix minus = at;
      plus(i, j) += h;
      minus(i, j) -= h;
      g(i, j) = (f(plus) - f(minus)) / (2.0 * h);
    }
  }
  return g;
}

/// Central differences of a matrix-valued gradient, vectorized row-major on
/// both sides: column (k*D + l) holds d vec(grad) / d Q_kl.
inline Matrix numeric_jacobian(const std::function<Matrix(const Matrix&)>& grad, const Matrix& at, double h) {
  const Index n = at.size();
  Matrix jac(n, n);
  for (Index k = 0; k < at.rows(); ++k) {
    for (Index l = 0; l < at.cols(); ++l) {
      Matrix plus = at;
      Matrix minus = at;
      plus(k, l) += h;
      minus(k, l) -= h;
      jac.col(k * at.cols() + l) = (vectorize_rows(grad(plus)) - vectorize_rows(grad(minus))) / (2.0 * h);
    }
  }
  return jac;
}

/// Objective as an explicit double sum over samples.
inline double objective_by_sums(const Matrix& q, const Matrix& x, const Vector& alpha, const Vector& lambda,
                                double beta) {
  const Index n = x.cols();
  double first = 0.0;
  double second = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vector yi = q * x.col(i);
    first += alpha(i) * yi.dot(yi);
    for (Index j = 0; j < n; ++j) second += alpha(i) * alpha(j) * yi.dot(q * x.col(j));
  }
  double reg = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) reg += lambda(i) * lambda(j) * (q * x.col(i)).dot(q * x.col(j));
  return first - second + beta * reg;
}

/// Objective via Tr(Q X (diag a - a a' + beta l l') X' Q').
inline double objective_by_trace(const Matrix& q, const Matrix& x, const Vector& alpha, const Vector& lambda,
                                 double beta) {
  Matrix m = -alpha * alpha.transpose() + beta * lambda * lambda.transpose();
  m.diagonal() += alpha;
  return (q * x * m * x.transpose() * q.transpose()).trace();
}

struct GridOptimum {
  double objective = -1e300;
  Vector alpha;
};

/// Maximize the SVDD dual over the simplex grid {k / steps} intersected with
/// the box alpha <= C, by exhaustive enumeration with incremental sums.
inline GridOptimum brute_force_dual(const Matrix& gram, double C, int steps = 1000) {
  const Index n = gram.rows();
  const int cap = static_cast<int>(std::floor(C * steps + 1e-9));
  GridOptimum best;
  std::vector<int> k(static_cast<std::size_t>(n), 0);
  const double inv = 1.0 / steps;

  // partial[i] = sum over fixed j of k_j * G_ij
  std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
  std::function<void(Index, int, double, double)> rec = [&](Index depth, int remaining, double lin, double quad) {
    if (depth == n - 1) {
      if (remaining > cap) return;
      const double kd = remaining;
      const double l = lin + kd * gram(depth, depth);
      const double q = quad + 2.0 * kd * partial[static_cast<std::size_t>(depth)] + kd * kd * gram(depth, depth);
      const double obj = l * inv - q * inv * inv;
      if (obj > best.objective) {
        best.objective = obj;
        k[static_cast<std::size_t>(depth)] = remaining;
        best.alpha.resize(n);
        for (Index i = 0; i < n; ++i) best.alpha(i) = k[static_cast<std::size_t>(i)] * inv;
      }
      return;
    }
    // Remaining coordinates must be able to absorb what is left.
    const int rest = static_cast<int>(n - 1 - depth);
    const int lo = std::max(0, remaining - rest * cap);
    const int hi = std::min(cap, remaining);
    for (int v = lo; v <= hi; ++v) {
      const double kv = v;
      const double l = lin + kv * gram(depth, depth);
      const double q = quad + 2.0 * kv * partial[static_cast<std::size_t>(depth)] + kv * kv * gram(depth, depth);
      k[static_cast<std::size_t>(depth)] = v;
      for (Index i = depth + 1; i < n; ++i) partial[static_cast<std::size_t>(i)] += kv * gram(i, depth);
      rec(depth + 1, remaining - v, l, q);
      for (Index i = depth + 1; i < n; ++i) partial[static_cast<std::size_t>(i)] -= kv * gram(i, depth);
    }
  };
  rec(0, steps, 0.0, 0.0);
  return best;
}

struct Blobs {
  Matrix train_target;  // D x n_train
  Matrix test;          // D x n_test
  std::vector<bool> test_is_target;
};

/// Target cloud N(0, I) and an outlier cloud N(shift * 1, I).
inline Blobs make_blobs(std::uint64_t seed, Index dim, Index n_train, Index n_test_target, Index n_test_outlier,
                        double shift) {
  Blobs b;
  b.train_target = random_matrix(dim, n_train, seed);
  const Matrix tt = random_matrix(dim, n_test_target, seed + 1);
  Matrix to = random_matrix(dim, n_test_outlier, seed + 2);
  to.array() += shift;
  b.test.resize(dim, n_test_target + n_test_outlier);
  b.test << tt, to;
  b.test_is_target.assign(static_cast<std::size_t>(n_test_target), true);
  b.test_is_target.resize(static_cast<std::size_t>(n_test_target + n_test_outlier), false);
  return b;
}

/// Two-class CSV-shaped data set built from blobs (labels "target"/"outlier").
inline DataSet blobs_dataset(std::uint64_t seed, Index dim, Index n_target, Index n_outlier, double shift) {
  DataSet ds;
  ds.name = "blobs";
  ds.class_names = {"target", "outlier"};
  Matrix t = random_matrix(dim, n_target, seed);
  Matrix o = random_matrix(dim, n_outlier, seed + 7);
  o.array() += shift;
  ds.features.resize(dim, n_target + n_outlier);
  ds.features << t, o;
  ds.labels.assign(static_cast<std::size_t>(n_target), 0);
  ds.labels.resize(static_cast<std::size_t>(n_target + n_outlier), 1);
  return ds;
}

}  // namespace ssvdd::testing
