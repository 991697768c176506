#pragma once

// JSON persistence for TrainedModel. Matrices are nested row-major arrays;
// doubles are written with round-trip precision so a reloaded model predicts
// bit-for-bit like the original.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssvdd/model.hpp"

namespace ssvdd {

using json = nlohmann::json;

namespace detail {

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline json indices_to_json(const std::vector<Index>& idx) {
  json arr = json::array();
  for (Index i : idx) arr.push_back(i);
  return arr;
}

inline const json& field(const json& obj, const char* name, const std::string& path) {
  if (!obj.is_object()) fail(ErrorKind::SchemaError, "'" + path + "' is not an object");
  const auto it = obj.find(name);
  if (it == obj.end()) fail(ErrorKind::SchemaError, "missing field '" + path + (path.empty() ? "" : ".") + name + "'");
  return *it;
}

inline std::string join(const std::string& path, const char* name) { return path.empty() ? name : path + "." + name; }

inline double get_real(const json& obj, const char* name, const std::string& path) {
  const json& v = field(obj, name, path);
  if (!v.is_number()) fail(ErrorKind::SchemaError, "field '" + join(path, name) + "' must be a number");
  return v.get<double>();
}

inline std::int64_t get_int(const json& obj, const char* name, const std::string& path) {
  const json& v = field(obj, name, path);
  if (!v.is_number_integer()) fail(ErrorKind::SchemaError, "field '" + join(path, name) + "' must be an integer");
  return v.get<std::int64_t>();
}

inline std::string get_string(const json& obj, const char* name, const std::string& path) {
  const json& v = field(obj, name, path);
  if (!v.is_string()) fail(ErrorKind::SchemaError, "field '" + join(path, name) + "' must be a string");
  return v.get<std::string>();
}

inline Matrix json_to_matrix(const json& v, const std::string& name) {
  if (!v.is_array()) fail(ErrorKind::SchemaError, "field '" + name + "' must be an array of rows");
  const Index rows = static_cast<Index>(v.size());
  Index cols = -1;
  for (const json& row : v) {
    if (!row.is_array()) fail(ErrorKind::SchemaError, "field '" + name + "' must be an array of rows");
    if (cols < 0) cols = static_cast<Index>(row.size());
    if (static_cast<Index>(row.size()) != cols) fail(ErrorKind::SchemaError, "field '" + name + "' has ragged rows");
  }
  Matrix m(rows, cols < 0 ? 0 : cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const json& e = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (!e.is_number()) fail(ErrorKind::SchemaError, "field '" + name + "' has a non-numeric entry");
      m(i, j) = e.get<double>();
    }
  }
  return m;
}

inline Vector json_to_vector(const json& v, const std::string& name) {
  if (!v.is_array()) fail(ErrorKind::SchemaError, "field '" + name + "' must be an array");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(ErrorKind::SchemaError, "field '" + name + "' has a non-numeric entry");
    out(static_cast<Index>(i)) = v[i].get<double>();
  }
  return out;
}

inline std::vector<Index> json_to_indices(const json& v, const std::string& name) {
  if (!v.is_array()) fail(ErrorKind::SchemaError, "field '" + name + "' must be an array");
  std::vector<Index> out;
  for (const json& e : v) {
    if (!e.is_number_integer()) fail(ErrorKind::SchemaError, "field '" + name + "' must hold integers");
    out.push_back(e.get<Index>());
  }
  return out;
}

}  // namespace detail

inline json model_to_json(const TrainedModel& m) {
  json doc;
  doc["format_version"] = m.format_version;

  json cfg;
  cfg["method"] = to_string(m.method.algorithm);
  cfg["kernel"] = to_string(m.method.kernel);
  cfg["psi"] = to_string(m.method.psi);
  cfg["direction"] = to_string(m.method.direction);
  cfg["optimizer"] = to_string(m.config.optimizer);
  cfg["d"] = m.config.d;
  cfg["C"] = m.config.C;
  cfg["beta"] = m.config.beta;
  cfg["eta"] = m.config.eta;
  cfg["sigma"] = m.hyper.sigma;
  cfg["requested_d"] = m.hyper.d;
  cfg["k_max"] = m.config.k_max;
  cfg["seed"] = m.config.seed;
  cfg["hessian_beta_mode"] = to_string(m.config.hessian_beta_mode);
  cfg["damping"] = m.config.damping;
  cfg["pinv_tol"] = m.config.pinv_tol;
  cfg["input_dim"] = m.input_dim;
  cfg["target_class"] = m.target_class;
  doc["config"] = std::move(cfg);

  doc["Q"] = detail::matrix_to_json(m.Q);
  json desc;
  desc["alpha"] = detail::vector_to_json(m.description.alpha.alpha);
  desc["center"] = detail::vector_to_json(m.description.center);
  desc["radius_sq"] = m.description.radius_sq;
  desc["sv_indices"] = detail::indices_to_json(m.description.sv_indices);
  desc["boundary_sv_indices"] = detail::indices_to_json(m.description.boundary_sv_indices);
  doc["description"] = std::move(desc);
  doc["Y_train"] = detail::matrix_to_json(m.Y_train);

  if (m.npt) {
    json npt;
    npt["Phi"] = detail::matrix_to_json(m.npt->Phi);
    npt["U_r"] = detail::matrix_to_json(m.npt->U_r);
    npt["eigvals_r"] = detail::vector_to_json(m.npt->eigvals_r);
    npt["K_train"] = detail::matrix_to_json(m.npt->K_train);
    npt["sigma"] = m.npt->sigma;
    npt["train_X"] = detail::matrix_to_json(m.npt->train_X);
    doc["npt"] = std::move(npt);
  }
  if (m.scaler) {
    json sc;
    sc["mean"] = detail::vector_to_json(m.scaler->mean);
    sc["scale"] = detail::vector_to_json(m.scaler->scale);
    doc["scaler"] = std::move(sc);
  }
  return doc;
}

/// Re-checks every invariant a loaded model must satisfy.
inline void validate_model(const TrainedModel& m) {
  const auto bad = [](const std::string& what) { fail(ErrorKind::InvariantViolation, what); };
  if ((m.method.kernel == KernelKind::rbf) != m.npt.has_value()) bad("kernel = rbf must coincide with an npt block");
  if (orthonormality_error(m.Q) > 1e-8) bad("Q rows are not orthonormal");
  const Index feat_dim = m.npt ? m.npt->rank() : m.input_dim;
  if (m.Q.cols() != feat_dim) bad("Q width does not match the feature dimension");
  if (m.Y_train.rows() != m.Q.rows()) bad("Y_train rows do not match Q");
  const Index n = m.Y_train.cols();
  if (m.description.alpha.alpha.size() != n) bad("alpha length does not match Y_train");
  if (m.description.center.size() != m.Q.rows()) bad("center dimension does not match Q");
  if (!(m.description.radius_sq >= 0.0)) bad("radius_sq must be non-negative");
  for (Index i : m.description.sv_indices)
    if (i < 0 || i >= n) bad("sv_indices out of range");
  for (Index i : m.description.boundary_sv_indices)
    if (i < 0 || i >= n) bad("boundary_sv_indices out of range");
  if (m.npt) {
    const NptBasis& b = *m.npt;
    const Index nt = b.train_X.cols();
    if (b.train_X.rows() != m.input_dim) bad("npt.train_X dimension does not match input_dim");
    if (b.K_train.rows() != nt || b.K_train.cols() != nt) bad("npt.K_train shape mismatch");
    if (b.U_r.rows() != nt || b.U_r.cols() != b.rank()) bad("npt.U_r shape mismatch");
    if (b.eigvals_r.size() != b.rank() || (b.rank() > 0 && b.eigvals_r.minCoeff() <= 0.0)) bad("npt.eigvals_r invalid");
    if (b.Phi.cols() != nt) bad("npt.Phi shape mismatch");
    if (!(b.sigma > 0.0)) bad("npt.sigma must be positive");
  }
  if (m.scaler && (m.scaler->mean.size() != m.input_dim || m.scaler->scale.size() != m.input_dim)) {
    bad("scaler dimension mismatch");
  }
}

inline TrainedModel model_from_json(const json& doc) {
  using namespace detail;
  TrainedModel m;
  const std::int64_t version = get_int(doc, "format_version", "");
  if (version != kModelFormatVersion) {
    fail(ErrorKind::VersionError, "unsupported format_version " + std::to_string(version));
  }
  m.format_version = static_cast<int>(version);

  const json& cfg = field(doc, "config", "");
  try {
    m.method.algorithm = parse_algorithm(get_string(cfg, "method", "config"));
    m.method.kernel = parse_kernel(get_string(cfg, "kernel", "config"));
    m.method.psi = parse_psi(get_string(cfg, "psi", "config"));
    m.method.direction = parse_direction(get_string(cfg, "direction", "config"));
    m.config.hessian_beta_mode = parse_hessian_mode(get_string(cfg, "hessian_beta_mode", "config"));
    const std::string opt = get_string(cfg, "optimizer", "config");
    if (opt != "newton" && opt != "gradient") fail(ErrorKind::SchemaError, "config.optimizer must be newton or gradient");
    m.config.optimizer = opt == "newton" ? OptimizerKind::newton : OptimizerKind::gradient;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) fail(ErrorKind::SchemaError, e.what());
    throw;
  }
  m.config.d = get_int(cfg, "d", "config");
  m.config.C = get_real(cfg, "C", "config");
  m.config.beta = get_real(cfg, "beta", "config");
  m.config.eta = get_real(cfg, "eta", "config");
  m.config.k_max = static_cast<int>(get_int(cfg, "k_max", "config"));
  m.config.seed = field(cfg, "seed", "config").get<std::uint64_t>();
  m.config.damping = get_real(cfg, "damping", "config");
  m.config.pinv_tol = get_real(cfg, "pinv_tol", "config");
  m.config.reg = m.method.psi;
  m.config.direction = m.method.direction;
  m.hyper.sigma = get_real(cfg, "sigma", "config");
  m.hyper.d = get_int(cfg, "requested_d", "config");
  m.hyper.C = m.config.C;
  m.hyper.beta = m.config.beta;
  m.hyper.eta = m.config.eta;
  m.input_dim = get_int(cfg, "input_dim", "config");
  m.target_class = get_string(cfg, "target_class", "config");

  m.Q = json_to_matrix(field(doc, "Q", ""), "Q");
  const json& desc = field(doc, "description", "");
  m.description.alpha.alpha = json_to_vector(field(desc, "alpha", "description"), "description.alpha");
  m.description.alpha.C = m.config.C;
  m.description.center = json_to_vector(field(desc, "center", "description"), "description.center");
  m.description.radius_sq = get_real(desc, "radius_sq", "description");
  m.description.sv_indices = json_to_indices(field(desc, "sv_indices", "description"), "description.sv_indices");
  m.description.boundary_sv_indices =
      json_to_indices(field(desc, "boundary_sv_indices", "description"), "description.boundary_sv_indices");
  m.Y_train = json_to_matrix(field(doc, "Y_train", ""), "Y_train");

  if (doc.contains("npt")) {
    const json& npt = doc["npt"];
    NptBasis b;
    b.Phi = json_to_matrix(field(npt, "Phi", "npt"), "npt.Phi");
    b.U_r = json_to_matrix(field(npt, "U_r", "npt"), "npt.U_r");
    b.eigvals_r = json_to_vector(field(npt, "eigvals_r", "npt"), "npt.eigvals_r");
    b.K_train = json_to_matrix(field(npt, "K_train", "npt"), "npt.K_train");
    b.sigma = get_real(npt, "sigma", "npt");
    b.train_X = json_to_matrix(field(npt, "train_X", "npt"), "npt.train_X");
    m.npt = std::move(b);
  }
  if (doc.contains("scaler")) {
    const json& sc = doc["scaler"];
    Standardizer s;
    s.mean = json_to_vector(field(sc, "mean", "scaler"), "scaler.mean");
    s.scale = json_to_vector(field(sc, "scale", "scaler"), "scaler.scale");
    m.scaler = std::move(s);
  }
  validate_model(m);
  return m;
}

/// Writes to a sibling temporary file first so a failed save never leaves a
/// truncated model behind.
inline void save_model(const TrainedModel& model, const std::string& path) {
  validate_model(model);
  const std::string text = model_to_json(model).dump(1) + "\n";
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + tmp);
    out << text;
    if (!out) fail(ErrorKind::IoError, "failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::IoError, "cannot move model into place at " + path);
  }
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  try {
    return model_from_json(doc);
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, e.what());
  }
}

}  // namespace ssvdd
