#pragma once

// Subspace SVDD: alternate between solving the SVDD dual in the subspace
// spanned by the rows of Q and updating Q with either a gradient step
// (S-SVDD) or a Newton step (NS-SVDD), re-orthonormalizing after each update.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ssvdd/metrics.hpp"
#include "ssvdd/numerics.hpp"
#include "ssvdd/svdd.hpp"

namespace ssvdd {

enum class RegKind { psi0, psi1, psi2, psi3 };
enum class Direction { minimize, maximize };
enum class OptimizerKind { gradient, newton };

/// Which weight the lambda lambda^T term carries in the Hessian core.
/// as_written drops beta there; consistent keeps it, matching the gradient.
enum class HessianBetaMode { as_written, consistent };

struct RegularizationSpec {
  RegKind kind = RegKind::psi2;
  double beta = 1.0;
  // Boundary-SV threshold for psi3; negative selects sv_epsilon(C).
  double boundary_eps = -1.0;
};

struct TrainConfig {
  Index d = 2;
  double C = 0.2;
  double beta = 1.0;
  double eta = 0.01;
  RegKind reg = RegKind::psi2;
  Direction direction = Direction::minimize;
  OptimizerKind optimizer = OptimizerKind::newton;
  int k_max = 100;
  std::uint64_t seed = 42;
  HessianBetaMode hessian_beta_mode = HessianBetaMode::as_written;
  double damping = 0.0;
  double pinv_tol = kDefaultPinvTol;
};

struct ProjectionState {
  Matrix Q;
  int iteration = 0;
  Direction direction = Direction::minimize;
};

/// One row per iteration t = 0..k_max-1, describing the model after t
/// updates of Q.
struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double gmean = std::numeric_limits<double>::quiet_NaN();
  double orth_error = 0.0;
};

/// Held-out data already expressed in the training feature space.
struct EvalSplit {
  Matrix features;
  std::vector<bool> is_target;
};

struct SubspaceFit {
  ProjectionState state;
  DataDescription description;
  Matrix Y_train;
  std::vector<IterationRecord> trace;
};

inline void validate(const TrainConfig& cfg, Index big_d) {
  if (!(cfg.eta > 0.0)) fail(ErrorKind::InvalidArgument, "eta must be positive");
  if (cfg.k_max < 1) fail(ErrorKind::InvalidArgument, "k_max must be >= 1");
  if (cfg.d < 1 || cfg.d > big_d) {
    fail(ErrorKind::InvalidArgument,
         "subspace dimension d=" + std::to_string(cfg.d) + " outside [1, " + std::to_string(big_d) + "]");
  }
  if (cfg.beta < 0.0) fail(ErrorKind::InvalidArgument, "beta must be non-negative");
  if (cfg.damping < 0.0) fail(ErrorKind::InvalidArgument, "damping must be non-negative");
}

inline Matrix project(const Matrix& q, const Matrix& x) {
  if (q.cols() != x.rows()) {
    fail(ErrorKind::DimensionMismatch,
         "Q is " + std::to_string(q.rows()) + "x" + std::to_string(q.cols()) + " but X has " +
             std::to_string(x.rows()) + " rows");
  }
  return q * x;
}

inline Vector build_lambda(const RegularizationSpec& spec, const AlphaVector& alpha) {
  const Index n = alpha.alpha.size();
  switch (spec.kind) {
    case RegKind::psi0: return Vector::Zero(n);
    case RegKind::psi1: return Vector::Ones(n);
    case RegKind::psi2: return alpha.alpha;
    case RegKind::psi3: {
      const double eps = spec.boundary_eps >= 0.0 ? spec.boundary_eps : sv_epsilon(alpha.C);
      Vector lam = Vector::Zero(n);
      for (Index i = 0; i < n; ++i) {
        const double a = alpha.alpha(i);
        if (a > eps && a < alpha.C - eps) lam(i) = a;
      }
      return lam;
    }
  }
  return Vector::Zero(n);
}

namespace detail {

inline void check_shapes(const Matrix& q, const Matrix& x, const Vector& alpha, const Vector& lambda) {
  if (q.cols() != x.rows() || alpha.size() != x.cols() || lambda.size() != x.cols()) {
    fail(ErrorKind::DimensionMismatch, "Q/X/alpha/lambda shapes disagree");
  }
}

}  // namespace detail

/// N x N core diag(alpha) - alpha alpha^T + w lambda lambda^T.
inline Matrix core_weights(const Vector& alpha, const Vector& lambda, double lambda_weight) {
  Matrix m = -alpha * alpha.transpose();
  m.diagonal() += alpha;
  m.noalias() += lambda_weight * (lambda * lambda.transpose());
  return m;
}

/// Regularized subspace criterion
/// sum_i a_i |Q x_i|^2 - sum_ij a_i a_j (Q x_i)'(Q x_j) + beta |Q X lambda|^2.
inline double objective(const Matrix& q, const Matrix& x, const Vector& alpha, const Vector& lambda, double beta) {
  detail::check_shapes(q, x, alpha, lambda);
  const Matrix y = q * x;
  const Vector sq_norms = y.colwise().squaredNorm().transpose();
  const Vector center = y * alpha;
  const Vector reg = y * lambda;
  return alpha.dot(sq_norms) - center.squaredNorm() + beta * reg.squaredNorm();
}

/// dL/dQ = 2 Q X (diag(alpha) - alpha alpha^T + beta lambda lambda^T) X^T.
inline Matrix gradient(const Matrix& q, const Matrix& x, const Vector& alpha, const Vector& lambda, double beta) {
  detail::check_shapes(q, x, alpha, lambda);
  return 2.0 * (q * x) * core_weights(alpha, lambda, beta) * x.transpose();
}

/// D x D block B of the Hessian. Under row-major vectorization the full
/// Hessian is I_d (x) B: second derivatives across different rows of Q vanish.
inline Matrix hessian_core(const Matrix& x, const Vector& alpha, const Vector& lambda, double beta,
                           HessianBetaMode mode) {
  if (alpha.size() != x.cols() || lambda.size() != x.cols()) {
    fail(ErrorKind::DimensionMismatch, "hessian_core: X/alpha/lambda shapes disagree");
  }
  const double w = mode == HessianBetaMode::consistent ? beta : 1.0;
  return 2.0 * x * core_weights(alpha, lambda, w) * x.transpose();
}

/// I_d (x) B materialized as a dD x dD matrix.
inline Matrix kron_identity(const Matrix& b, Index d) {
  const Index n = b.rows();
  Matrix h = Matrix::Zero(d * n, d * n);
  for (Index r = 0; r < d; ++r) h.block(r * n, r * n, n, n) = b;
  return h;
}

inline constexpr Index kHessianFullCap = 2500;

/// Element-by-element Hessian: entry ((i,j),(k,l)) is
/// 2 tr[X M X^T (S^{ij})^T S^{kl}] with explicit single-entry structure
/// matrices. Quadratic in dD; intended as a reference for hessian_core.
inline Matrix hessian_full(const Matrix& x, const Vector& alpha, const Vector& lambda, double beta,
                           HessianBetaMode mode, Index d) {
  const Index big_d = x.rows();
  const Index n = d * big_d;
  if (n > kHessianFullCap) {
    fail(ErrorKind::TooLarge, "hessian_full limited to dD <= 2500, got " + std::to_string(n));
  }
  if (alpha.size() != x.cols() || lambda.size() != x.cols()) {
    fail(ErrorKind::DimensionMismatch, "hessian_full: X/alpha/lambda shapes disagree");
  }
  const double w = mode == HessianBetaMode::consistent ? beta : 1.0;
  const Matrix inner = x * core_weights(alpha, lambda, w) * x.transpose();

  auto structure = [&](Index i, Index j) {
    Matrix s = Matrix::Zero(d, big_d);
    s(i, j) = 1.0;
    return s;
  };

  Matrix h(n, n);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < big_d; ++j) {
      const Matrix s_ij = structure(i, j);
      for (Index k = 0; k < d; ++k) {
        for (Index l = 0; l < big_d; ++l) {
          const Matrix pattern = s_ij.transpose() * structure(k, l);
          h(i * big_d + j, k * big_d + l) = 2.0 * (inner * pattern).trace();
        }
      }
    }
  }
  return h;
}

/// Step direction for one update. Newton solves B s_r = g_r for each row r of
/// the gradient, which is the dD-sized system (I_d (x) B) vec(S) = vec(G).
inline Matrix step_direction(const Matrix& grad, const Matrix& b, const TrainConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::gradient) return grad;
  if (b.rows() != grad.cols() || b.cols() != grad.cols()) {
    fail(ErrorKind::DimensionMismatch, "Hessian core does not match gradient width");
  }
  Matrix step(grad.rows(), grad.cols());
  for (Index r = 0; r < grad.rows(); ++r) {
    step.row(r) = solve_damped(b, grad.row(r).transpose(), cfg.damping, cfg.pinv_tol).transpose();
  }
  return step;
}

/// Q -/+ eta * step, before orthonormalization (minus when minimizing).
inline Matrix raw_update(const Matrix& q, const Matrix& grad, const Matrix& b, const TrainConfig& cfg) {
  if (grad.rows() != q.rows() || grad.cols() != q.cols()) {
    fail(ErrorKind::DimensionMismatch, "gradient shape differs from Q");
  }
  const Matrix step = step_direction(grad, b, cfg);
  const double sign = cfg.direction == Direction::minimize ? -1.0 : 1.0;
  // Vectorize, update, de-vectorize, mirroring the row-major layout.
  const Vector updated = vectorize_rows(q) + sign * cfg.eta * vectorize_rows(step);
  return devectorize_rows(updated, q.rows(), q.cols());
}

inline Matrix orthonormalize(const Matrix& m) { return row_normalize_l2(qr_orthonormalize_rows(m)); }

inline ProjectionState update_step(const ProjectionState& state, const Matrix& grad, const Matrix& b,
                                   const TrainConfig& cfg) {
  ProjectionState next = state;
  next.Q = orthonormalize(raw_update(state.Q, grad, b, cfg));
  next.iteration = state.iteration + 1;
  return next;
}

namespace detail {

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// Rows that are non-finite or (numerically) in the span of earlier rows.
inline std::vector<Index> dependent_rows(const Matrix& m) {
  std::vector<Index> bad;
  double scale = 0.0;
  for (Index r = 0; r < m.rows(); ++r) {
    if (m.row(r).allFinite()) scale = std::max(scale, m.row(r).norm());
  }
  std::vector<Vector> basis;
  for (Index r = 0; r < m.rows(); ++r) {
    if (!m.row(r).allFinite()) {
      bad.push_back(r);
      continue;
    }
    Vector v = m.row(r).transpose();
    for (const Vector& u : basis) v -= u.dot(v) * u;
    const double nv = v.norm();
    if (!(nv > 1e-12 * scale)) {
      bad.push_back(r);
      continue;
    }
    basis.push_back(v / nv);
  }
  return bad;
}

// Orthonormalize, redrawing offending rows from the generator at most
// three times before reporting a degenerate subspace.
inline Matrix orthonormalize_or_redraw(Matrix m, std::mt19937_64& rng) {
  constexpr int kMaxRedraws = 3;
  for (int attempt = 0;; ++attempt) {
    try {
      if (m.allFinite()) return orthonormalize(m);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient && e.kind() != ErrorKind::ZeroRow) throw;
    }
    if (attempt >= kMaxRedraws) {
      fail(ErrorKind::DegenerateSubspace, "projection stayed rank-deficient after 3 redraws");
    }
    std::vector<Index> bad = dependent_rows(m);
    if (bad.empty()) bad.push_back(m.rows() - 1);
    const Matrix fresh = gaussian_matrix(static_cast<Index>(bad.size()), m.cols(), rng);
    for (std::size_t k = 0; k < bad.size(); ++k) m.row(bad[k]) = fresh.row(static_cast<Index>(k));
  }
}

inline double evaluate_gmean(const EvalSplit& eval, const Matrix& q, const DataDescription& desc,
                             const Matrix& y_train) {
  const auto decisions = decide_batch(q * eval.features, desc, y_train);
  try {
    return gmean(confusion(decisions, eval.is_target));
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace detail

struct TrainOptions {
  const EvalSplit* eval = nullptr;
  // Replaces the random draw; still orthonormalized before use.
  std::optional<Matrix> initial_q;
  DualSolverOptions dual;
};

/// Alternating optimization of the projection and the description. k starts
/// at 1 and the loop runs while k < k_max, so k_max = 1 performs no update.
inline SubspaceFit train(const Matrix& x, const TrainConfig& cfg, const TrainOptions& opts = {}) {
  const Index big_d = x.rows();
  const Index n = x.cols();
  if (n < 2) fail(ErrorKind::TooFewSamples, "training needs at least 2 samples");
  require_finite(x, "training data");
  validate(cfg, big_d);
  if (!is_feasible_C(cfg.C, n)) {
    fail(ErrorKind::InfeasibleC, "C < 1/N infeasible (C=" + std::to_string(cfg.C) + ", N=" + std::to_string(n) + ")");
  }

  std::mt19937_64 rng(cfg.seed);
  Matrix q0 = opts.initial_q ? *opts.initial_q : detail::gaussian_matrix(cfg.d, big_d, rng);
  if (q0.rows() != cfg.d || q0.cols() != big_d) fail(ErrorKind::DimensionMismatch, "initial Q has wrong shape");

  SubspaceFit fit;
  fit.state.direction = cfg.direction;
  fit.state.Q = detail::orthonormalize_or_redraw(std::move(q0), rng);
  fit.state.iteration = 0;

  const RegularizationSpec reg{cfg.reg, cfg.beta, -1.0};
  auto record = [&](const Matrix& y, const AlphaVector& alpha, const Vector& lambda) {
    IterationRecord rec;
    rec.iteration = fit.state.iteration;
    rec.objective = objective(fit.state.Q, x, alpha.alpha, lambda, cfg.beta);
    rec.orth_error = orthonormality_error(fit.state.Q);
    if (opts.eval != nullptr) {
      rec.gmean = detail::evaluate_gmean(*opts.eval, fit.state.Q, describe(alpha, y), y);
    }
    fit.trace.push_back(rec);
  };

  for (int k = 1; k < cfg.k_max; ++k) {
    const Matrix y = project(fit.state.Q, x);
    const AlphaVector alpha = solve_dual(y.transpose() * y, cfg.C, opts.dual);
    const Vector lambda = build_lambda(reg, alpha);
    record(y, alpha, lambda);

    const Matrix grad = gradient(fit.state.Q, x, alpha.alpha, lambda, cfg.beta);
    Matrix b;
    if (cfg.optimizer == OptimizerKind::newton) {
      b = hessian_core(x, alpha.alpha, lambda, cfg.beta, cfg.hessian_beta_mode);
    }
    Matrix raw = raw_update(fit.state.Q, grad, b, cfg);
    fit.state.Q = detail::orthonormalize_or_redraw(std::move(raw), rng);
    fit.state.iteration += 1;
  }

  fit.Y_train = project(fit.state.Q, x);
  const AlphaVector alpha = solve_dual(fit.Y_train.transpose() * fit.Y_train, cfg.C, opts.dual);
  record(fit.Y_train, alpha, build_lambda(reg, alpha));
  fit.description = describe(alpha, fit.Y_train);
  return fit;
}

}  // namespace ssvdd
