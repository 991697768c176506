#pragma once

// Support Vector Data Description on already-projected data: the dual QP
// over the simplex with box bound C, the hypersphere it induces, and the
// distance-based decision rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ssvdd/numerics.hpp"

namespace ssvdd {

struct AlphaVector {
  Vector alpha;
  double C = 1.0;
  double kkt_gap = 0.0;  // largest pairwise KKT violation at exit
  std::int64_t updates = 0;
};

/// Support-vector threshold: alpha_i > sv_epsilon(C) counts as a support
/// vector, and alpha_i < C - sv_epsilon(C) as unbounded.
inline double sv_epsilon(double C) { return 1e-6 * C; }

struct DataDescription {
  AlphaVector alpha;
  Vector center;
  double radius_sq = 0.0;
  std::vector<Index> sv_indices;
  std::vector<Index> boundary_sv_indices;
};

enum class Label { positive, negative };

inline const char* to_string(Label l) { return l == Label::positive ? "positive" : "negative"; }

struct Decision {
  double distance_sq = 0.0;
  Label label = Label::negative;
};

struct DualSolverOptions {
  // Pair updates allowed before giving up; 0 selects 10 * N^2.
  std::int64_t max_updates = 0;
  // Stopping gap, relative to max(1, max_i G_ii).
  double relative_tol = 1e-10;
};

/// Dual objective sum_i alpha_i G_ii - alpha^T G alpha.
inline double dual_objective(const Matrix& gram, const Vector& alpha) {
  return gram.diagonal().dot(alpha) - alpha.dot(gram * alpha);
}

inline bool is_feasible_C(double C, Index n) {
  return n > 0 && C * static_cast<double>(n) >= 1.0 - 1e-12;
}

namespace detail {

// Most-violating pair for min f(a) = a^T G a - diag(G)^T a, where grad is
// 2 G a - diag(G). `up` may grow (a < C), `low` may shrink (a > 0).
struct ViolatingPair {
  Index up = -1;
  Index low = -1;
  double gap = 0.0;
};

inline ViolatingPair most_violating_pair(const Vector& alpha, const Vector& grad, double C) {
  ViolatingPair p;
  double min_up = 0.0;
  double max_low = 0.0;
  for (Index k = 0; k < alpha.size(); ++k) {
    if (alpha(k) < C && (p.up < 0 || grad(k) < min_up)) {
      p.up = k;
      min_up = grad(k);
    }
    if (alpha(k) > 0.0 && (p.low < 0 || grad(k) > max_low)) {
      p.low = k;
      max_low = grad(k);
    }
  }
  if (p.up >= 0 && p.low >= 0) p.gap = max_low - min_up;
  return p;
}

// Second index for a fixed `up`: the shrinkable coordinate whose exchange with
// `up` gains the most under the exact pair curvature. Plain first-order
// selection zig-zags on low-rank Grams.
inline Index best_partner(const Matrix& gram, const Vector& alpha, const Vector& grad, Index up, double floor_curv) {
  Index best = -1;
  double best_gain = 0.0;
  for (Index k = 0; k < alpha.size(); ++k) {
    if (!(alpha(k) > 0.0) || k == up) continue;
    const double gap = grad(k) - grad(up);
    if (!(gap > 0.0)) continue;
    const double curv = std::max(gram(up, up) + gram(k, k) - 2.0 * gram(up, k), floor_curv);
    const double gain = gap * gap / curv;
    if (best < 0 || gain > best_gain) {
      best = k;
      best_gain = gain;
    }
  }
  return best;
}

// Descent over the face spanned by the free coordinates (0 < alpha < C).
// On low-rank Grams SMO can spend thousands of tiny pair moves sliding along a
// flat face; the face step jumps straight to its end. The bordered KKT system
// [2 G_FF 1; 1^T 0] is solved in the least-squares sense: the solution is the
// curved part of the move, the residual a zero-curvature descent direction.
// Each is taken with an exact line search clipped to the box.
inline bool face_step(const Matrix& gram, Vector& alpha, const Vector& grad, double C) {
  std::vector<Index> free;
  for (Index k = 0; k < alpha.size(); ++k) {
    if (alpha(k) > 0.0 && alpha(k) < C) free.push_back(k);
  }
  const Index m = static_cast<Index>(free.size());
  if (m < 2) return false;
  Matrix kkt = Matrix::Zero(m + 1, m + 1);
  Vector rhs = Vector::Zero(m + 1);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) kkt(a, b) = 2.0 * gram(free[a], free[b]);
    kkt(a, m) = 1.0;
    kkt(m, a) = 1.0;
    rhs(a) = -grad(free[a]);
  }
  const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  const Vector residual = rhs - kkt * sol;

  Vector g(m);
  for (Index a = 0; a < m; ++a) g(a) = grad(free[a]);
  bool moved = false;
  const auto line_move = [&](Vector delta) {
    delta.array() -= delta.mean();
    double slope = g.dot(delta);
    if (!(slope < 0.0)) return;
    double curv = 0.0;
    for (Index a = 0; a < m; ++a) {
      for (Index b = 0; b < m; ++b) curv += delta(a) * gram(free[a], free[b]) * delta(b);
    }
    double s_max = std::numeric_limits<double>::infinity();
    Index hit = -1;
    for (Index a = 0; a < m; ++a) {
      const double x = alpha(free[a]);
      const double room = delta(a) > 0.0 ? (C - x) / delta(a) : delta(a) < 0.0 ? -x / delta(a) : s_max;
      if (room < s_max) {
        s_max = room;
        hit = a;
      }
    }
    const double s_opt = curv > 0.0 ? -slope / (2.0 * curv) : std::numeric_limits<double>::infinity();
    const double s = std::min(s_opt, s_max);
    if (!std::isfinite(s) || !(s > 0.0)) return;
    for (Index a = 0; a < m; ++a) alpha(free[a]) = std::clamp(alpha(free[a]) + s * delta(a), 0.0, C);
    if (s == s_max && hit >= 0) alpha(free[hit]) = delta(hit) > 0.0 ? C : 0.0;
    // The gradient on the face moves by 2 G_FF (s delta).
    for (Index a = 0; a < m; ++a) {
      for (Index b = 0; b < m; ++b) g(a) += 2.0 * s * gram(free[a], free[b]) * delta(b);
    }
    moved = true;
  };
  line_move(sol.head(m));
  line_move(residual.head(m));
  if (!moved) return false;

  // Clamping and snapping leave rounding-level drift in the total mass; hand
  // it to the free coordinate with the most room.
  const double excess = alpha.sum() - 1.0;
  Index sink = -1;
  double best_room = -1.0;
  for (Index k : free) {
    const double room = excess > 0.0 ? alpha(k) : C - alpha(k);
    if (alpha(k) > 0.0 && alpha(k) < C && room > best_room) {
      best_room = room;
      sink = k;
    }
  }
  if (sink >= 0 && best_room >= std::abs(excess)) alpha(sink) -= excess;
  return true;
}

}  // namespace detail

/// Largest first-order gain available from moving mass between two
/// coordinates. Zero at an exact KKT point.
inline double kkt_gap(const Matrix& gram, const Vector& alpha, double C) {
  const Vector grad = 2.0 * (gram * alpha) - gram.diagonal();
  return std::max(0.0, detail::most_violating_pair(alpha, grad, C).gap);
}

/// Maximize the SVDD dual over {sum alpha = 1, 0 <= alpha <= C} by pairwise
/// coordinate exchange (SMO). The first index is the steepest growable
/// coordinate, the second the partner with the largest exact gain; stopping
/// uses the first-order gap. Deterministic: ties go to the smallest index.
inline AlphaVector solve_dual(const Matrix& gram, double C, const DualSolverOptions& opts = {}) {
  const Index n = gram.rows();
  if (gram.cols() != n) fail(ErrorKind::DimensionMismatch, "Gram matrix must be square");
  if (n == 0) fail(ErrorKind::TooFewSamples, "empty Gram matrix");
  require_finite(gram, "Gram matrix");
  if (!is_feasible_C(C, n)) {
    fail(ErrorKind::InfeasibleC, "C < 1/N infeasible (C=" + std::to_string(C) + ", N=" + std::to_string(n) + ")");
  }

  AlphaVector out;
  out.C = C;
  out.alpha = Vector::Constant(n, std::min(C, 1.0 / static_cast<double>(n)));
  if (n == 1) return out;

  const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
  const double tol = opts.relative_tol * scale;
  const std::int64_t max_updates =
      opts.max_updates > 0 ? opts.max_updates : 10 * static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n);

  Vector& alpha = out.alpha;
  Vector grad = 2.0 * (gram * alpha) - gram.diagonal();

  std::int64_t updates = 0;
  // When the gap has not halved within a window of N updates, try a face step.
  const std::int64_t window = std::max<std::int64_t>(n, 10);
  double checkpoint_gap = std::numeric_limits<double>::infinity();
  while (true) {
    auto pair = detail::most_violating_pair(alpha, grad, C);
    if (pair.gap <= tol) {
      // Incremental gradient drifts; confirm on a fresh one.
      grad = 2.0 * (gram * alpha) - gram.diagonal();
      pair = detail::most_violating_pair(alpha, grad, C);
      if (pair.gap <= tol) {
        out.kkt_gap = std::max(0.0, pair.gap);
        out.updates = updates;
        return out;
      }
    }
    if (updates >= max_updates) {
      fail(ErrorKind::NotConverged,
           "SVDD dual KKT gap " + std::to_string(pair.gap) + " after " + std::to_string(updates) + " updates");
    }

    if (updates > 0 && updates % window == 0) {
      if (pair.gap > 0.5 * checkpoint_gap && detail::face_step(gram, alpha, grad, C)) {
        grad = 2.0 * (gram * alpha) - gram.diagonal();
        checkpoint_gap = std::numeric_limits<double>::infinity();
        ++updates;
        continue;
      }
      checkpoint_gap = pair.gap;
    }

    const Index i = pair.up;
    const Index partner = detail::best_partner(gram, alpha, grad, i, 1e-12 * scale);
    const Index j = partner >= 0 ? partner : pair.low;
    const double gap = grad(j) - grad(i);
    const double curvature = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
    const double room_up = C - alpha(i);
    const double room_low = alpha(j);
    const double t_max = std::min(room_up, room_low);
    double t = curvature > 1e-15 * scale ? gap / (2.0 * curvature) : t_max;
    if (t >= t_max) {
      // Land exactly on whichever bound was hit.
      t = t_max;
      alpha(i) = room_up <= room_low ? C : alpha(i) + t;
      alpha(j) = room_low <= room_up ? 0.0 : alpha(j) - t;
    } else {
      alpha(i) += t;
      alpha(j) -= t;
    }
    grad += (2.0 * t) * (gram.col(i) - gram.col(j));
    ++updates;
  }
}

/// Center a = Y alpha; radius from the mean squared distance of the boundary
/// support vectors, falling back to the largest support-vector distance when
/// every support vector sits at the bound.
inline DataDescription describe(const AlphaVector& alpha, const Matrix& y) {
  const Index n = y.cols();
  if (alpha.alpha.size() != n) fail(ErrorKind::DimensionMismatch, "alpha length differs from sample count");

  DataDescription desc;
  desc.alpha = alpha;
  desc.center = y * alpha.alpha;

  const double eps = sv_epsilon(alpha.C);
  for (Index k = 0; k < n; ++k) {
    const double a = alpha.alpha(k);
    if (a > eps) {
      desc.sv_indices.push_back(k);
      if (a < alpha.C - eps) desc.boundary_sv_indices.push_back(k);
    }
  }
  if (desc.sv_indices.empty()) fail(ErrorKind::NoSupportVectors, "all alpha below support-vector threshold");

  auto dist_sq = [&](Index k) { return (y.col(k) - desc.center).squaredNorm(); };
  if (!desc.boundary_sv_indices.empty()) {
    double sum = 0.0;
    for (Index k : desc.boundary_sv_indices) sum += dist_sq(k);
    desc.radius_sq = sum / static_cast<double>(desc.boundary_sv_indices.size());
  } else {
    double best = 0.0;
    for (Index k : desc.sv_indices) best = std::max(best, dist_sq(k));
    desc.radius_sq = best;
  }
  return desc;
}

/// Squared distance to the center through the kernel expansion
/// y*'y* - 2 sum_i a_i y*'y_i + sum_ij a_i a_j y_i'y_j.
inline Decision decide(const Vector& y_star, const DataDescription& desc, const Matrix& y_train,
                       const AlphaVector& alpha) {
  if (y_star.size() != y_train.rows() || alpha.alpha.size() != y_train.cols()) {
    fail(ErrorKind::DimensionMismatch, "decide: dimension mismatch");
  }
  const Vector& a = alpha.alpha;
  const double quad = a.dot((y_train.transpose() * y_train) * a);
  const double cross = a.dot(y_train.transpose() * y_star);
  Decision out;
  out.distance_sq = y_star.squaredNorm() - 2.0 * cross + quad;
  out.label = out.distance_sq <= desc.radius_sq ? Label::positive : Label::negative;
  return out;
}

/// Column-wise decide for a batch; the alpha-alpha term is shared.
inline std::vector<Decision> decide_batch(const Matrix& y_star, const DataDescription& desc, const Matrix& y_train) {
  const Vector& a = desc.alpha.alpha;
  if ((y_star.cols() > 0 && y_star.rows() != y_train.rows()) || a.size() != y_train.cols()) {
    fail(ErrorKind::DimensionMismatch, "decide_batch: dimension mismatch");
  }
  const double quad = a.dot((y_train.transpose() * y_train) * a);
  std::vector<Decision> out;
  out.reserve(static_cast<std::size_t>(y_star.cols()));
  if (y_star.cols() == 0) return out;
  const Vector cross = y_star.transpose() * (y_train * a);
  for (Index m = 0; m < y_star.cols(); ++m) {
    Decision dec;
    dec.distance_sq = y_star.col(m).squaredNorm() - 2.0 * cross(m) + quad;
    dec.label = dec.distance_sq <= desc.radius_sq ? Label::positive : Label::negative;
    out.push_back(dec);
  }
  return out;
}

}  // namespace ssvdd
