// Command-line front end: train, predict, benchmark, trace.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssvdd/ssvdd.hpp"

namespace {

using namespace ssvdd;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return kExitUsage;
    case ErrorKind::ParseError:
    case ErrorKind::RaggedRows:
    case ErrorKind::EmptyFile:
    case ErrorKind::UnknownClass:
    case ErrorKind::TooFewSamples:
    case ErrorKind::NoPositives:
    case ErrorKind::NoNegatives:
    case ErrorKind::IoError:
    case ErrorKind::SchemaError:
    case ErrorKind::VersionError:
    case ErrorKind::InvariantViolation:
    case ErrorKind::DimensionMismatch: return kExitData;
    default: return kExitNumerical;
  }
}

// Outputs go through a sibling temporary so a failing run never leaves a
// half-written file behind. "-" means stdout.
void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content << std::flush;
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + tmp);
    out << content;
    if (!out) fail(ErrorKind::IoError, "failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::IoError, "cannot move output into place at " + path);
  }
}

LabelColumn parse_label_column(const std::string& s) {
  if (s == "first") return LabelColumn::first;
  if (s == "last") return LabelColumn::last;
  if (s == "none") return LabelColumn::none;
  fail(ErrorKind::InvalidArgument, "label column must be first, last or none");
}

const char* to_string(LabelColumn c) {
  return c == LabelColumn::first ? "first" : c == LabelColumn::last ? "last" : "none";
}

bool parse_on_off(const std::string& s, const std::string& flag) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  fail(ErrorKind::InvalidArgument, flag + " must be on or off");
}

struct DataFlags {
  std::string path;
  bool header = false;
  std::string label_column = "last";
};

void add_data_flags(CLI::App& app, DataFlags& f, bool required) {
  auto* opt = app.add_option("--data", f.path, "CSV file, one sample per row");
  if (required) opt->required();
  app.add_flag("--header", f.header, "first row is a header");
  app.add_option("--label-column", f.label_column, "first, last or none")->capture_default_str();
}

struct MethodFlags {
  std::string method = "nssvdd";
  std::string kernel = "linear";
  std::string psi = "2";
  std::string direction = "min";
  double beta = 1.0;
  double eta = 0.01;
  Index dim = 2;
  double C = 0.2;
  double sigma = 1.0;
  int iters = 100;
  std::uint64_t seed = 42;
  std::string hessian_mode = "as-written";
  double damping = 0.0;
  std::string zscore = "off";
};

void add_method_flags(CLI::App& app, MethodFlags& f) {
  app.add_option("--method", f.method, "svdd, ssvdd (gradient) or nssvdd (Newton)")->capture_default_str();
  app.add_option("--kernel", f.kernel, "linear or rbf")->capture_default_str();
  app.add_option("--psi", f.psi, "regularizer 0-3")->capture_default_str();
  app.add_option("--direction", f.direction, "min or max")->capture_default_str();
  app.add_option("--beta", f.beta)->capture_default_str();
  app.add_option("--eta", f.eta, "learning rate")->capture_default_str();
  app.add_option("--dim", f.dim, "subspace dimension")->capture_default_str();
  app.add_option("--C", f.C)->capture_default_str();
  app.add_option("--sigma", f.sigma, "RBF width")->capture_default_str();
  app.add_option("--iters", f.iters, "iteration budget k_max")->capture_default_str();
  app.add_option("--seed", f.seed)->capture_default_str();
  app.add_option("--hessian-beta-mode", f.hessian_mode, "as-written or consistent")->capture_default_str();
  app.add_option("--damping", f.damping)->capture_default_str();
  app.add_option("--zscore", f.zscore, "on or off")->capture_default_str();
}

struct ResolvedMethod {
  MethodVariant method;
  Hyperparameters hyper;
  FitOptions fit;
};

ResolvedMethod resolve(const MethodFlags& f) {
  ResolvedMethod r;
  r.method.algorithm = parse_algorithm(f.method);
  r.method.kernel = parse_kernel(f.kernel);
  r.method.psi = parse_psi(f.psi);
  r.method.direction = parse_direction(f.direction);
  r.hyper.beta = f.beta;
  r.hyper.eta = f.eta;
  r.hyper.d = f.dim;
  r.hyper.C = f.C;
  r.hyper.sigma = f.sigma;
  r.fit.k_max = f.iters;
  r.fit.seed = f.seed;
  r.fit.hessian_beta_mode = parse_hessian_mode(f.hessian_mode);
  r.fit.damping = f.damping;
  r.fit.zscore = parse_on_off(f.zscore, "--zscore");
  if (!(r.hyper.C > 0.0)) fail(ErrorKind::InvalidArgument, "--C must be positive");
  if (!(r.hyper.eta > 0.0)) fail(ErrorKind::InvalidArgument, "--eta must be positive");
  if (r.hyper.beta < 0.0) fail(ErrorKind::InvalidArgument, "--beta must be non-negative");
  if (r.hyper.d < 1) fail(ErrorKind::InvalidArgument, "--dim must be >= 1");
  if (!(r.hyper.sigma > 0.0)) fail(ErrorKind::InvalidArgument, "--sigma must be positive");
  if (r.fit.k_max < 1) fail(ErrorKind::InvalidArgument, "--iters must be >= 1");
  if (r.fit.damping < 0.0) fail(ErrorKind::InvalidArgument, "--damping must be non-negative");
  return r;
}

std::string describe_config(const ResolvedMethod& r) {
  std::ostringstream os;
  os << "method=" << to_string(r.method.algorithm) << " kernel=" << to_string(r.method.kernel)
     << " psi=" << to_string(r.method.psi) << " direction=" << to_string(r.method.direction) << " "
     << to_string(r.hyper) << " iters=" << r.fit.k_max << " seed=" << r.fit.seed
     << " hessian-beta-mode=" << to_string(r.fit.hessian_beta_mode)
     << " damping=" << detail::format_real(r.fit.damping) << " zscore=" << (r.fit.zscore ? "on" : "off");
  return os.str();
}

void log_config(const std::string& command, const std::string& text) {
  std::clog << "[config] " << command << ": " << text << '\n';
}

DataSet load(const DataFlags& f) {
  return load_csv(f.path, f.header, parse_label_column(f.label_column));
}

int run_train(const DataFlags& data, const MethodFlags& mf, const std::string& target, const std::string& out) {
  const ResolvedMethod r = resolve(mf);
  const LabelColumn lc = parse_label_column(data.label_column);
  if (lc == LabelColumn::none) fail(ErrorKind::InvalidArgument, "train needs a label column");
  log_config("train", "data=" + data.path + " header=" + (data.header ? "yes" : "no") +
                          " label-column=" + to_string(lc) + " target-class=" + target + " out=" + out + " " +
                          describe_config(r));
  const DataSet ds = load(data);
  const std::vector<Index> idx = indices_of_class(ds, ds.class_index(target));
  TrainedModel model = fit_model(select_columns(ds.features, idx), r.method, r.hyper, r.fit);
  model.target_class = target;
  save_model(model, out);
  const IterationRecord& last = model.trace.back();
  std::cout << "trained " << model.method.to_string() << " on N=" << idx.size() << " D=" << ds.dim()
            << " iterations=" << last.iteration << " final_objective=" << detail::format_real(last.objective)
            << " radius_sq=" << detail::format_real(model.description.radius_sq) << '\n';
  return 0;
}

int run_predict(const DataFlags& data, const std::string& model_path, const std::string& out) {
  const LabelColumn lc = parse_label_column(data.label_column);
  log_config("predict", "model=" + model_path + " data=" + data.path + " header=" + (data.header ? "yes" : "no") +
                            " label-column=" + to_string(lc) + " out=" + (out.empty() ? "-" : out));
  const TrainedModel model = load_model(model_path);
  const DataSet ds = load(data);
  const std::vector<Decision> decisions = predict(model, ds.features);
  std::ostringstream os;
  os << "row_index,distance_sq,label\n";
  for (std::size_t k = 0; k < decisions.size(); ++k) {
    os << k << ',' << detail::format_real(decisions[k].distance_sq) << ',' << to_string(decisions[k].label) << '\n';
  }
  write_output(out, os.str());
  return 0;
}

template <typename T>
std::vector<T> json_list(const nlohmann::json& v, const char* name) {
  if (!v.is_array() || v.empty()) fail(ErrorKind::SchemaError, std::string("grid.") + name + " must be a non-empty array");
  return v.get<std::vector<T>>();
}

BenchmarkConfig parse_benchmark_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open config " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("config is not valid JSON: ") + e.what());
  }
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  BenchmarkConfig cfg;
  try {
    if (!doc.contains("datasets") || !doc["datasets"].is_array() || doc["datasets"].empty()) {
      fail(ErrorKind::SchemaError, "config needs a non-empty 'datasets' array");
    }
    for (const auto& d : doc["datasets"]) {
      DatasetEntry e;
      if (!d.contains("path")) fail(ErrorKind::SchemaError, "dataset entry missing 'path'");
      std::filesystem::path p = d["path"].get<std::string>();
      if (p.is_relative()) p = base / p;
      e.path = p.string();
      e.name = d.value("name", std::filesystem::path(e.path).stem().string());
      e.label_column = parse_label_column(d.value("label_column", std::string("last")));
      if (e.label_column == LabelColumn::none) fail(ErrorKind::InvalidArgument, "benchmark datasets need labels");
      e.has_header = d.value("has_header", false);
      if (d.contains("target_classes")) e.target_classes = d["target_classes"].get<std::vector<std::string>>();
      cfg.datasets.push_back(std::move(e));
    }
    if (!doc.contains("methods") || !doc["methods"].is_array() || doc["methods"].empty()) {
      fail(ErrorKind::SchemaError, "config needs a non-empty 'methods' array");
    }
    for (const auto& m : doc["methods"]) cfg.methods.push_back(MethodVariant::parse(m.get<std::string>()));
    cfg.repetitions = doc.value("repetitions", cfg.repetitions);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.folds = doc.value("folds", cfg.folds);
    cfg.train_frac = doc.value("train_frac", cfg.train_frac);
    cfg.fit.k_max = doc.value("k_max", cfg.fit.k_max);
    cfg.fit.damping = doc.value("damping", cfg.fit.damping);
    cfg.fit.zscore = doc.value("zscore", cfg.fit.zscore);
    if (doc.contains("hessian_beta_mode")) {
      cfg.fit.hessian_beta_mode = parse_hessian_mode(doc["hessian_beta_mode"].get<std::string>());
    }
    if (doc.contains("grid")) {
      const auto& g = doc["grid"];
      if (g.contains("beta")) cfg.grid.beta_values = json_list<double>(g["beta"], "beta");
      if (g.contains("C")) cfg.grid.C_values = json_list<double>(g["C"], "C");
      if (g.contains("sigma")) cfg.grid.sigma_values = json_list<double>(g["sigma"], "sigma");
      if (g.contains("d")) cfg.grid.d_values = json_list<Index>(g["d"], "d");
      if (g.contains("eta")) cfg.grid.eta_values = json_list<double>(g["eta"], "eta");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("config: ") + e.what());
  }
  if (cfg.repetitions < 1) fail(ErrorKind::InvalidArgument, "repetitions must be >= 1");
  if (cfg.folds < 2) fail(ErrorKind::InvalidArgument, "folds must be >= 2");
  if (!(cfg.train_frac > 0.0 && cfg.train_frac < 1.0)) fail(ErrorKind::InvalidArgument, "train_frac must lie in (0, 1)");
  if (cfg.fit.k_max < 1) fail(ErrorKind::InvalidArgument, "k_max must be >= 1");
  cfg.grid.validate();
  return cfg;
}

template <typename T>
std::string join_values(const std::vector<T>& v) {
  std::string s;
  for (const T& x : v) {
    if (!s.empty()) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += detail::format_real(x);
    } else {
      s += std::to_string(x);
    }
  }
  return s;
}

int run_benchmark_cmd(const std::string& config_path, const std::string& out, const std::string& table, int jobs,
                      bool timing) {
  if (jobs < 1) fail(ErrorKind::InvalidArgument, "--jobs must be >= 1");
  BenchmarkConfig cfg = parse_benchmark_config(config_path);
  cfg.jobs = jobs;
  cfg.record_timing = timing;

  std::ostringstream desc;
  desc << "config=" << config_path << " out=" << out << " table=" << (table.empty() ? "-" : table)
       << " jobs=" << jobs << " timing=" << (timing ? "on" : "off") << " repetitions=" << cfg.repetitions
       << " seed=" << cfg.seed << " folds=" << cfg.folds << " train_frac=" << detail::format_real(cfg.train_frac)
       << " k_max=" << cfg.fit.k_max << " hessian-beta-mode=" << to_string(cfg.fit.hessian_beta_mode)
       << " damping=" << detail::format_real(cfg.fit.damping) << " zscore=" << (cfg.fit.zscore ? "on" : "off")
       << " grid.beta=" << join_values(cfg.grid.beta_values) << " grid.C=" << join_values(cfg.grid.C_values)
       << " grid.sigma=" << join_values(cfg.grid.sigma_values) << " grid.d=" << join_values(cfg.grid.d_values)
       << " grid.eta=" << join_values(cfg.grid.eta_values) << " methods=";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) desc << (i ? "," : "") << cfg.methods[i].to_string();
  log_config("benchmark", desc.str());

  std::vector<std::pair<DatasetEntry, DataSet>> data;
  for (const DatasetEntry& e : cfg.datasets) {
    DataSet ds = load_csv(e.path, e.has_header, e.label_column);
    ds.name = e.name;
    for (const std::string& t : e.target_classes) (void)ds.class_index(t);
    data.emplace_back(e, std::move(ds));
  }
  const BenchmarkReport report = run_benchmark(data, cfg);

  std::ostringstream csv;
  write_report_csv(csv, report);
  std::ostringstream tab;
  write_report_table(tab, report);
  write_output(out, csv.str());
  write_output(table, tab.str());
  return 0;
}

int run_trace_cmd(const DataFlags& data, const MethodFlags& mf, const std::string& target, int splits,
                  const std::string& out) {
  const ResolvedMethod r = resolve(mf);
  if (splits < 1) fail(ErrorKind::InvalidArgument, "--splits must be >= 1");
  const LabelColumn lc = parse_label_column(data.label_column);
  if (lc == LabelColumn::none) fail(ErrorKind::InvalidArgument, "trace needs a label column");
  log_config("trace", "data=" + data.path + " header=" + (data.header ? "yes" : "no") + " label-column=" +
                          to_string(lc) + " target-class=" + target + " splits=" + std::to_string(splits) +
                          " out=" + (out.empty() ? "-" : out) + " " + describe_config(r));
  const DataSet ds = load(data);
  TraceOptions opts;
  opts.splits = splits;
  opts.seed = r.fit.seed;
  opts.fit = r.fit;
  const auto rows = trace_run(ds, target, r.method, r.hyper, opts);
  std::ostringstream os;
  write_trace_csv(os, rows);
  write_output(out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace support vector data description"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress");

  DataFlags train_data;
  MethodFlags train_method;
  std::string train_target;
  std::string train_out;
  auto* train = app.add_subcommand("train", "fit a model on one target class");
  add_data_flags(*train, train_data, true);
  train->add_option("--target-class", train_target, "class used as the target")->required();
  train->add_option("--out", train_out, "model file to write")->required();
  add_method_flags(*train, train_method);

  DataFlags predict_data;
  std::string predict_model;
  std::string predict_out;
  auto* pred = app.add_subcommand("predict", "score samples with a saved model");
  pred->add_option("--model", predict_model, "model file")->required();
  add_data_flags(*pred, predict_data, true);
  pred->add_option("--out", predict_out, "CSV output (default stdout)");

  std::string bench_config;
  std::string bench_out;
  std::string bench_table;
  int bench_jobs = 1;
  bool bench_timing = false;
  auto* bench = app.add_subcommand("benchmark", "repeated-split benchmark with grid search");
  bench->add_option("--config", bench_config, "benchmark JSON file")->required();
  bench->add_option("--out", bench_out, "report CSV")->required();
  bench->add_option("--table", bench_table, "aligned text table (default stdout)");
  bench->add_option("--jobs", bench_jobs, "concurrent work items")->capture_default_str();
  bench->add_flag("--timing", bench_timing, "record wall-clock time per split");

  DataFlags trace_data;
  MethodFlags trace_method;
  std::string trace_target;
  std::string trace_out;
  int trace_splits = 5;
  auto* tr = app.add_subcommand("trace", "per-iteration objective and test Gmean");
  add_data_flags(*tr, trace_data, true);
  tr->add_option("--target-class", trace_target, "class used as the target")->required();
  add_method_flags(*tr, trace_method);
  tr->add_option("--splits", trace_splits)->capture_default_str();
  tr->add_option("--out", trace_out, "trace CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  set_log_level(verbose ? LogLevel::info : LogLevel::warning);

  try {
    if (*train) return run_train(train_data, train_method, train_target, train_out);
    if (*pred) return run_predict(predict_data, predict_model, predict_out);
    if (*bench) return run_benchmark_cmd(bench_config, bench_out, bench_table, bench_jobs, bench_timing);
    if (*tr) return run_trace_cmd(trace_data, trace_method, trace_target, trace_splits, trace_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
