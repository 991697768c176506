#pragma once

// Dense linear-algebra primitives shared by every other module. Eigen does
// the heavy lifting; this layer pins down tolerances, sign conventions and
// the row-major vectorization order used for the projection matrix.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "ssvdd/error.hpp"

namespace ssvdd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct EigDecomposition {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column k pairs with eigenvalues[k]
};

inline constexpr double kDefaultPinvTol = 1e-10;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) fail(ErrorKind::InvalidArgument, std::string(what) + " has non-finite entries");
}

inline double max_asymmetry(const Matrix& s) {
  if (s.rows() == 0) return 0.0;
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

/// Flip each row so that its entry of largest magnitude is non-negative.
/// Ties resolve to the first such entry.
inline void canonicalize_row_signs(Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index c = 0; c < m.cols(); ++c) {
      const double a = std::abs(m(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = c;
      }
    }
    if (m.cols() > 0 && m(r, best) < 0.0) m.row(r) *= -1.0;
  }
}

/// Orthonormalize the rows of a wide d x D matrix (d <= D) with a Householder
/// QR of its transpose. Output rows span the same space as the input rows.
inline Matrix qr_orthonormalize_rows(const Matrix& m) {
  const Index d = m.rows();
  const Index big_d = m.cols();
  if (d > big_d) {
    fail(ErrorKind::DimensionMismatch,
         "qr_orthonormalize_rows needs rows <= cols, got " + std::to_string(d) + "x" + std::to_string(big_d));
  }
  require_finite(m, "qr_orthonormalize_rows input");
  if (d == 0) return m;

  Eigen::HouseholderQR<Matrix> qr(m.transpose());
  const Matrix r = qr.matrixQR().topLeftCorner(d, d).triangularView<Eigen::Upper>();
  const Vector diag = r.diagonal().cwiseAbs();
  const double largest = diag.maxCoeff();
  if (!(largest > 0.0) || diag.minCoeff() < 1e-12 * largest) {
    fail(ErrorKind::RankDeficient, "numerical rank below " + std::to_string(d));
  }
  Matrix thin = qr.householderQ() * Matrix::Identity(big_d, d);
  Matrix out = thin.transpose();
  canonicalize_row_signs(out);
  return out;
}

inline Matrix row_normalize_l2(const Matrix& m) {
  Matrix out = m;
  for (Index r = 0; r < out.rows(); ++r) {
    const double n = out.row(r).norm();
    if (!(n >= 1e-15)) fail(ErrorKind::ZeroRow, "row " + std::to_string(r) + " has norm " + std::to_string(n));
    out.row(r) /= n;
  }
  return out;
}

/// Symmetric eigendecomposition with eigenvalues sorted descending. The input
/// is symmetrized first; asymmetry above 1e-9 (scaled by max(1, max|S|)) is
/// rejected.
inline EigDecomposition sym_eig(const Matrix& s) {
  if (s.rows() != s.cols()) fail(ErrorKind::DimensionMismatch, "sym_eig needs a square matrix");
  require_finite(s, "sym_eig input");
  const double scale = s.size() ? std::max(1.0, s.cwiseAbs().maxCoeff()) : 1.0;
  if (max_asymmetry(s) > 1e-9 * scale) fail(ErrorKind::NotSymmetric, "asymmetry exceeds tolerance");

  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) fail(ErrorKind::NotConverged, "eigensolver failed");

  EigDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// Moore-Penrose pseudo-inverse; singular values below rel_tol * sigma_max are
/// treated as zero.
inline Matrix pinv(const Matrix& m, double rel_tol = kDefaultPinvTol) {
  if (!(rel_tol > 0.0)) fail(ErrorKind::InvalidArgument, "pinv rel_tol must be positive");
  require_finite(m, "pinv input");
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = rel_tol * (sv.size() ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Minimum-norm least-squares solution of (H + mu I) x = g for symmetric H.
/// Eigenvalues of the shifted matrix with |lambda| < rel_tol * max|lambda|
/// are dropped, so a singular H acts through its pseudo-inverse.
inline Vector solve_damped(const Matrix& h, const Vector& g, double mu = 0.0,
                           double rel_tol = kDefaultPinvTol) {
  if (h.rows() != h.cols() || h.rows() != g.size()) {
    fail(ErrorKind::DimensionMismatch, "solve_damped shape mismatch");
  }
  if (mu < 0.0) fail(ErrorKind::InvalidArgument, "damping must be non-negative");
  const EigDecomposition eig = sym_eig(h);
  const Vector shifted = eig.eigenvalues.array() + mu;
  const double largest = shifted.size() ? shifted.cwiseAbs().maxCoeff() : 0.0;
  const Vector coeffs = eig.eigenvectors.transpose() * g;
  Vector scaled = Vector::Zero(coeffs.size());
  for (Index i = 0; i < coeffs.size(); ++i) {
    const double lam = shifted(i);
    if (std::abs(lam) >= rel_tol * largest && lam != 0.0) scaled(i) = coeffs(i) / lam;
  }
  return eig.eigenvectors * scaled;
}

/// Row-major vectorization: entry (i, j) of an r x c matrix lands at i*c + j.
inline Vector vectorize_rows(const Matrix& m) {
  Vector v(m.size());
  const Index cols = m.cols();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < cols; ++j) v(i * cols + j) = m(i, j);
  return v;
}

inline Matrix devectorize_rows(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) fail(ErrorKind::DimensionMismatch, "devectorize_rows size mismatch");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

inline double orthonormality_error(const Matrix& q) {
  if (q.rows() == 0) return 0.0;
  return (q * q.transpose() - Matrix::Identity(q.rows(), q.rows())).cwiseAbs().maxCoeff();
}

}  // namespace ssvdd
