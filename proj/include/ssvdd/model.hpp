#pragma once

// End-to-end fitting of one method variant on target-class samples, and the
// trained bundle that prediction needs.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssvdd/data_io.hpp"
#include "ssvdd/kernel_npt.hpp"
#include "ssvdd/log.hpp"
#include "ssvdd/subspace.hpp"
#include "ssvdd/svdd.hpp"

namespace ssvdd {

enum class Algorithm { svdd, ssvdd, nssvdd };
enum class KernelKind { linear, rbf };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::svdd: return "svdd";
    case Algorithm::ssvdd: return "ssvdd";
    case Algorithm::nssvdd: return "nssvdd";
  }
  return "?";
}
inline const char* to_string(KernelKind k) { return k == KernelKind::linear ? "linear" : "rbf"; }
inline const char* to_string(RegKind r) {
  switch (r) {
    case RegKind::psi0: return "psi0";
    case RegKind::psi1: return "psi1";
    case RegKind::psi2: return "psi2";
    case RegKind::psi3: return "psi3";
  }
  return "?";
}
inline const char* to_string(Direction d) { return d == Direction::minimize ? "min" : "max"; }
inline const char* to_string(HessianBetaMode m) {
  return m == HessianBetaMode::as_written ? "as-written" : "consistent";
}
inline const char* to_string(OptimizerKind o) { return o == OptimizerKind::newton ? "newton" : "gradient"; }

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "svdd") return Algorithm::svdd;
  if (s == "ssvdd") return Algorithm::ssvdd;
  if (s == "nssvdd") return Algorithm::nssvdd;
  fail(ErrorKind::InvalidArgument, "unknown method '" + s + "' (svdd, ssvdd, nssvdd)");
}
inline KernelKind parse_kernel(const std::string& s) {
  if (s == "linear") return KernelKind::linear;
  if (s == "rbf") return KernelKind::rbf;
  fail(ErrorKind::InvalidArgument, "unknown kernel '" + s + "' (linear, rbf)");
}
inline RegKind parse_psi(const std::string& s) {
  if (s == "0" || s == "psi0") return RegKind::psi0;
  if (s == "1" || s == "psi1") return RegKind::psi1;
  if (s == "2" || s == "psi2") return RegKind::psi2;
  if (s == "3" || s == "psi3") return RegKind::psi3;
  fail(ErrorKind::InvalidArgument, "unknown regularizer '" + s + "' (0-3)");
}
inline Direction parse_direction(const std::string& s) {
  if (s == "min" || s == "minimize") return Direction::minimize;
  if (s == "max" || s == "maximize") return Direction::maximize;
  fail(ErrorKind::InvalidArgument, "unknown direction '" + s + "' (min, max)");
}
inline HessianBetaMode parse_hessian_mode(const std::string& s) {
  if (s == "as-written" || s == "as_written") return HessianBetaMode::as_written;
  if (s == "consistent") return HessianBetaMode::consistent;
  fail(ErrorKind::InvalidArgument, "unknown hessian beta mode '" + s + "' (as-written, consistent)");
}

struct MethodVariant {
  Algorithm algorithm = Algorithm::nssvdd;
  KernelKind kernel = KernelKind::linear;
  RegKind psi = RegKind::psi2;
  Direction direction = Direction::minimize;

  bool learns_subspace() const { return algorithm != Algorithm::svdd; }

  /// "svdd-linear", "nssvdd-rbf-psi2-min", ...
  std::string to_string() const {
    std::string s = std::string(ssvdd::to_string(algorithm)) + "-" + ssvdd::to_string(kernel);
    if (learns_subspace()) s += std::string("-") + ssvdd::to_string(psi) + "-" + ssvdd::to_string(direction);
    return s;
  }

  static MethodVariant parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, '-');) parts.push_back(tok);
    MethodVariant m;
    if (parts.empty()) fail(ErrorKind::InvalidArgument, "empty method string");
    m.algorithm = parse_algorithm(parts[0]);
    if (parts.size() > 1) m.kernel = parse_kernel(parts[1]);
    if (m.learns_subspace()) {
      if (parts.size() != 4) fail(ErrorKind::InvalidArgument, "method '" + text + "' should look like nssvdd-linear-psi2-min");
      m.psi = parse_psi(parts[2]);
      m.direction = parse_direction(parts[3]);
    } else if (parts.size() > 2) {
      fail(ErrorKind::InvalidArgument, "method '" + text + "' should look like svdd-linear");
    }
    return m;
  }

  friend bool operator==(const MethodVariant&, const MethodVariant&) = default;
};

struct Hyperparameters {
  double beta = 1.0;
  double C = 0.2;
  double sigma = 1.0;
  Index d = 2;
  double eta = 0.01;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// Settings shared by every fit in a run, as opposed to searched ones.
struct FitOptions {
  int k_max = 100;
  std::uint64_t seed = 42;
  HessianBetaMode hessian_beta_mode = HessianBetaMode::as_written;
  double damping = 0.0;
  bool zscore = false;
  double pinv_tol = kDefaultPinvTol;
  double rank_tol = kDefaultRankTol;
};

inline constexpr int kModelFormatVersion = 1;

struct TrainedModel {
  int format_version = kModelFormatVersion;
  MethodVariant method;
  Hyperparameters hyper;  // as requested
  TrainConfig config;     // as executed (d after clamping, optimizer, ...)
  Index input_dim = 0;
  std::string target_class;

  Matrix Q;
  DataDescription description;
  Matrix Y_train;
  std::optional<NptBasis> npt;
  std::optional<Standardizer> scaler;

  std::vector<IterationRecord> trace;  // not persisted
};

/// Held-out samples in the raw input space, labelled target / outlier.
struct RawEvalSplit {
  Matrix features;
  std::vector<bool> is_target;
};

inline TrainConfig make_train_config(const MethodVariant& method, const Hyperparameters& hyper,
                                     const FitOptions& opts) {
  TrainConfig cfg;
  cfg.d = hyper.d;
  cfg.C = hyper.C;
  cfg.beta = hyper.beta;
  cfg.eta = hyper.eta;
  cfg.reg = method.psi;
  cfg.direction = method.direction;
  cfg.optimizer = method.algorithm == Algorithm::ssvdd ? OptimizerKind::gradient : OptimizerKind::newton;
  cfg.k_max = opts.k_max;
  cfg.seed = opts.seed;
  cfg.hessian_beta_mode = opts.hessian_beta_mode;
  cfg.damping = opts.damping;
  cfg.pinv_tol = opts.pinv_tol;
  return cfg;
}

/// Fit on target-class samples (columns of x). Nonlinear variants first map
/// the data through the kernel features and then run the linear pipeline on
/// them unchanged.
inline TrainedModel fit_model(const Matrix& x, const MethodVariant& method, const Hyperparameters& hyper,
                              const FitOptions& opts, const RawEvalSplit* eval = nullptr) {
  if (x.cols() < 2) fail(ErrorKind::TooFewSamples, "need at least 2 target samples to train");
  require_finite(x, "training data");

  TrainedModel model;
  model.method = method;
  model.hyper = hyper;
  model.input_dim = x.rows();

  Matrix feats = x;
  std::optional<EvalSplit> eval_feats;
  if (eval != nullptr) eval_feats = EvalSplit{eval->features, eval->is_target};

  if (opts.zscore) {
    model.scaler = Standardizer::fit(feats);
    feats = model.scaler->apply(feats);
    if (eval_feats) eval_feats->features = model.scaler->apply(eval_feats->features);
  }
  if (method.kernel == KernelKind::rbf) {
    model.npt = npt_fit_data(feats, hyper.sigma, opts.rank_tol);
    if (eval_feats) eval_feats->features = npt_map_test(eval_feats->features, *model.npt);
    feats = model.npt->Phi;
  }

  TrainConfig cfg = make_train_config(method, hyper, opts);
  const Index feat_dim = feats.rows();

  if (!method.learns_subspace()) {
    cfg.d = feat_dim;
    cfg.k_max = 1;
    if (!is_feasible_C(cfg.C, feats.cols())) {
      fail(ErrorKind::InfeasibleC, "C < 1/N infeasible (C=" + std::to_string(cfg.C) + ", N=" +
                                       std::to_string(feats.cols()) + ")");
    }
    model.config = cfg;
    model.Q = Matrix::Identity(feat_dim, feat_dim);
    model.Y_train = feats;
    const AlphaVector alpha = solve_dual(feats.transpose() * feats, cfg.C);
    model.description = describe(alpha, model.Y_train);
    IterationRecord rec;
    const Vector zero = Vector::Zero(feats.cols());
    rec.objective = objective(model.Q, feats, alpha.alpha, zero, 0.0);
    if (eval_feats) rec.gmean = detail::evaluate_gmean(*eval_feats, model.Q, model.description, model.Y_train);
    model.trace.push_back(rec);
    return model;
  }

  if (cfg.d > feat_dim) {
    if (method.kernel == KernelKind::rbf) {
      log_warning("subspace dimension " + std::to_string(cfg.d) + " exceeds kernel rank " +
                  std::to_string(feat_dim) + "; clamping");
      cfg.d = feat_dim;
    } else {
      fail(ErrorKind::InvalidArgument, "subspace dimension " + std::to_string(cfg.d) + " exceeds input dimension " +
                                           std::to_string(feat_dim));
    }
  }
  model.config = cfg;

  TrainOptions topts;
  if (eval_feats) topts.eval = &*eval_feats;
  SubspaceFit fit = train(feats, cfg, topts);
  model.Q = std::move(fit.state.Q);
  model.description = std::move(fit.description);
  model.Y_train = std::move(fit.Y_train);
  model.trace = std::move(fit.trace);
  return model;
}

/// Map raw inputs into the model's description space (scaler, kernel
/// features, projection).
inline Matrix embed(const TrainedModel& model, const Matrix& x_new) {
  if (x_new.cols() > 0 && x_new.rows() != model.input_dim) {
    fail(ErrorKind::DimensionMismatch, "input has " + std::to_string(x_new.rows()) + " features, model expects " +
                                           std::to_string(model.input_dim));
  }
  if (x_new.cols() == 0) return Matrix(model.Q.rows(), 0);
  Matrix feats = model.scaler ? model.scaler->apply(x_new) : x_new;
  if (model.npt) feats = npt_map_test(feats, *model.npt);
  return project(model.Q, feats);
}

inline std::vector<Decision> predict(const TrainedModel& model, const Matrix& x_new) {
  if (x_new.cols() == 0) {
    if (x_new.rows() != 0 && x_new.rows() != model.input_dim) {
      fail(ErrorKind::DimensionMismatch, "input dimension does not match the model");
    }
    return {};
  }
  return decide_batch(embed(model, x_new), model.description, model.Y_train);
}

}  // namespace ssvdd
