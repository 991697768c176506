#pragma once

// Nonlinear projection trick: turn an RBF kernel into explicit finite
// features so the linear subspace machinery can run on them unchanged.

#include <cmath>
#include <string>

#include "ssvdd/numerics.hpp"

namespace ssvdd {

struct NptBasis {
  Matrix Phi;        // r x N explicit training features
  Matrix U_r;        // N x r retained eigenvectors of the centered kernel
  Vector eigvals_r;  // r retained (positive) eigenvalues, descending
  Matrix K_train;    // N x N uncentered training kernel
  double sigma = 1.0;
  Matrix train_X;    // D x N original training features

  Index rank() const { return Phi.rows(); }
};

inline constexpr double kDefaultRankTol = 1e-10;

/// K_ij = exp(-|x_i - x_j|^2 / (2 sigma^2)) between the columns of a and b.
inline Matrix rbf_kernel(const Matrix& a, const Matrix& b, double sigma) {
  if (!(sigma > 0.0)) fail(ErrorKind::NonPositiveSigma, "sigma must be positive, got " + std::to_string(sigma));
  if (a.rows() != b.rows()) fail(ErrorKind::DimensionMismatch, "rbf_kernel feature dimensions differ");
  const Vector an = a.colwise().squaredNorm().transpose();
  const Vector bn = b.colwise().squaredNorm().transpose();
  Matrix sq = -2.0 * a.transpose() * b;
  sq.colwise() += an;
  sq.rowwise() += bn.transpose();
  const double denom = 2.0 * sigma * sigma;
  return (-sq.cwiseMax(0.0) / denom).array().exp().matrix();
}

inline Matrix rbf_kernel(const Matrix& x, double sigma) {
  Matrix k = rbf_kernel(x, x, sigma);
  // Exact symmetry and unit diagonal regardless of cancellation in |a|^2+|b|^2-2ab.
  k = 0.5 * (k + k.transpose()).eval();
  k.diagonal().setOnes();
  return k;
}

/// (I - 11'/N) K (I - 11'/N), applied without forming the projector.
inline Matrix center_kernel(const Matrix& k) {
  if (k.rows() != k.cols()) fail(ErrorKind::DimensionMismatch, "kernel must be square");
  const double scale = k.size() ? std::max(1.0, k.cwiseAbs().maxCoeff()) : 1.0;
  if (max_asymmetry(k) > 1e-9 * scale) fail(ErrorKind::NotSymmetric, "kernel matrix is not symmetric");
  if (k.rows() == 0) return k;
  const Vector col_means = k.colwise().mean().transpose();
  const Vector row_means = k.rowwise().mean();
  const double total = k.mean();
  Matrix out = k;
  out.colwise() -= row_means;
  out.rowwise() -= col_means.transpose();
  out.array() += total;
  return out;
}

/// Eigendecompose the centered kernel and keep eigenpairs with
/// lambda > rank_tol * lambda_max (negatives always dropped). Phi is
/// A_r^{-1/2} U_r^T K_hat, so Phi^T Phi reproduces K_hat.
inline NptBasis npt_fit(const Matrix& k_hat, double rank_tol = kDefaultRankTol) {
  const EigDecomposition eig = sym_eig(k_hat);
  const double lam_max = eig.eigenvalues.size() ? eig.eigenvalues(0) : 0.0;
  Index r = 0;
  if (lam_max > 0.0) {
    while (r < eig.eigenvalues.size() && eig.eigenvalues(r) > rank_tol * lam_max) ++r;
  }
  if (r == 0) fail(ErrorKind::ZeroKernel, "centered kernel has no eigenvalue above the rank threshold");

  NptBasis basis;
  basis.eigvals_r = eig.eigenvalues.head(r);
  basis.U_r = eig.eigenvectors.leftCols(r);
  const Vector inv_sqrt = basis.eigvals_r.array().sqrt().inverse();
  basis.Phi = inv_sqrt.asDiagonal() * (basis.U_r.transpose() * k_hat);
  return basis;
}

/// Kernel pipeline for training data: RBF, centering, explicit features.
inline NptBasis npt_fit_data(const Matrix& x, double sigma, double rank_tol = kDefaultRankTol) {
  Matrix k = rbf_kernel(x, sigma);
  NptBasis basis = npt_fit(center_kernel(k), rank_tol);
  basis.K_train = std::move(k);
  basis.sigma = sigma;
  basis.train_X = x;
  return basis;
}

/// Map test columns into the explicit feature space: kernel vector against
/// the training points, the same centering as training, then
/// A_r^{-1/2} U_r^T k_hat.
inline Matrix npt_map_test(const Matrix& x_star, const NptBasis& basis) {
  if (x_star.cols() > 0 && x_star.rows() != basis.train_X.rows()) {
    fail(ErrorKind::DimensionMismatch, "test features have " + std::to_string(x_star.rows()) +
                                           " dimensions, training had " + std::to_string(basis.train_X.rows()));
  }
  if (x_star.cols() == 0) return Matrix(basis.rank(), 0);
  Matrix k_star = rbf_kernel(basis.train_X, x_star, basis.sigma);  // N x M
  const Vector kernel_means = basis.K_train.rowwise().mean();        // K 1 / N
  k_star.colwise() -= kernel_means;
  const Eigen::RowVectorXd col_means = k_star.colwise().mean();
  k_star.rowwise() -= col_means;
  const Vector inv_sqrt = basis.eigvals_r.array().sqrt().inverse();
  return inv_sqrt.asDiagonal() * (basis.U_r.transpose() * k_star);
}

inline Vector npt_map_test_point(const Vector& x_star, const NptBasis& basis) {
  return npt_map_test(Matrix(x_star), basis).col(0);
}

}  // namespace ssvdd
