#pragma once

// Cross-validated hyperparameter search, repeated-split benchmarking and
// per-iteration traces.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "ssvdd/data_io.hpp"
#include "ssvdd/log.hpp"
#include "ssvdd/metrics.hpp"
#include "ssvdd/model.hpp"

namespace ssvdd {

struct GridSpec {
  std::vector<double> beta_values{1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<double> C_values{0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> sigma_values{1e-1, 1.0, 1e1, 1e2, 1e3};
  std::vector<Index> d_values{1, 2, 3, 4, 5, 10, 20};
  std::vector<double> eta_values{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};

  void validate() const {
    if (beta_values.empty() || C_values.empty() || sigma_values.empty() || d_values.empty() || eta_values.empty()) {
      fail(ErrorKind::InvalidArgument, "every hyperparameter grid must be non-empty");
    }
  }
};

namespace detail {

inline std::string format_real(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be
// written to per-index slots by fn.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline std::string to_string(const Hyperparameters& h) {
  std::ostringstream os;
  os << "d=" << h.d << " C=" << detail::format_real(h.C) << " beta=" << detail::format_real(h.beta)
     << " eta=" << detail::format_real(h.eta) << " sigma=" << detail::format_real(h.sigma);
  return os.str();
}

/// Work-item seed: base seed mixed with a stable hash of the item's identity.
inline std::uint64_t derive_seed(std::uint64_t base, const std::string& identity) {
  return base + detail::fnv1a(identity);
}

/// Every grid point relevant to a method, sorted by (d, C, beta, eta, sigma)
/// with duplicates removed. Unused coordinates are pinned to a fixed value:
/// sigma for linear kernels; d, beta and eta for plain SVDD. psi0 ignores
/// beta, so only its smallest value is kept. d is capped at max_d (the input
/// dimension for linear kernels; pass 0 for no cap).
inline std::vector<Hyperparameters> grid_points(const GridSpec& grid, const MethodVariant& method, Index max_d) {
  grid.validate();
  const Hyperparameters fixed;
  std::vector<Index> ds{fixed.d};
  std::vector<double> betas{fixed.beta};
  std::vector<double> etas{fixed.eta};
  std::vector<double> sigmas{fixed.sigma};
  if (method.learns_subspace()) {
    ds.clear();
    for (Index d : grid.d_values) ds.push_back(max_d > 0 ? std::min(d, max_d) : d);
    betas = grid.beta_values;
    if (method.psi == RegKind::psi0) betas = {*std::min_element(betas.begin(), betas.end())};
    etas = grid.eta_values;
  }
  if (method.kernel == KernelKind::rbf) sigmas = grid.sigma_values;

  ds = detail::sorted_unique(ds);
  const std::vector<double> cs = detail::sorted_unique(grid.C_values);
  betas = detail::sorted_unique(betas);
  etas = detail::sorted_unique(etas);
  sigmas = detail::sorted_unique(sigmas);

  std::vector<Hyperparameters> out;
  for (Index d : ds)
    for (double c : cs)
      for (double b : betas)
        for (double e : etas)
          for (double s : sigmas) out.push_back(Hyperparameters{b, c, s, d, e});
  return out;
}

struct GridPointScore {
  Hyperparameters hyper;
  double score = 0.0;
  std::string error;  // non-empty if any fold failed
};

struct GridResult {
  Hyperparameters best;
  double cv_score = 0.0;
  std::vector<GridPointScore> scores;
};

struct SearchOptions {
  int folds = 5;
  std::uint64_t seed = 42;
  FitOptions fit;
  int jobs = 1;
};

inline RawEvalSplit make_eval_split(const DataSet& ds, const std::vector<Index>& idx, int target) {
  RawEvalSplit e;
  e.features = select_columns(ds.features, idx);
  for (Index i : idx) e.is_target.push_back(ds.labels[static_cast<std::size_t>(i)] == target);
  return e;
}

inline std::vector<Index> filter_class(const DataSet& ds, const std::vector<Index>& idx, int cls) {
  std::vector<Index> out;
  for (Index i : idx)
    if (ds.labels[static_cast<std::size_t>(i)] == cls) out.push_back(i);
  return out;
}

inline double evaluate_model(const TrainedModel& model, const RawEvalSplit& eval) {
  return gmean(confusion(predict(model, eval.features), eval.is_target));
}

/// Mean validation Gmean of one configuration across folds. Folds come from
/// the whole training portion; each fit sees only target-class members of
/// its training folds and is scored on the held-out fold with both classes.
inline GridPointScore cross_validate(const DataSet& ds, const OccSplit& split, const std::vector<Fold>& folds,
                                     const MethodVariant& method, const Hyperparameters& hyper,
                                     const SearchOptions& opts) {
  GridPointScore out;
  out.hyper = hyper;
  double total = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      const std::vector<Index> train_idx = filter_class(ds, folds[f].train, split.target_class);
      FitOptions fo = opts.fit;
      fo.seed = derive_seed(opts.seed, method.to_string() + "|" + to_string(hyper) + "|fold" + std::to_string(f));
      const TrainedModel model = fit_model(select_columns(ds.features, train_idx), method, hyper, fo);
      total += evaluate_model(model, make_eval_split(ds, folds[f].validation, split.target_class));
    } catch (const Error& e) {
      if (out.error.empty()) out.error = e.what();
    }
  }
  out.score = total / static_cast<double>(folds.size());
  return out;
}

/// Exhaustive search; failed fits score 0 for their fold. Ties resolve to
/// the first point in (d, C, beta, eta, sigma) order.
inline GridResult grid_search(const DataSet& ds, const OccSplit& split, const GridSpec& grid,
                              const MethodVariant& method, const SearchOptions& opts) {
  const Index max_d = method.kernel == KernelKind::linear ? ds.dim() : 0;
  const std::vector<Hyperparameters> points = grid_points(grid, method, max_d);
  const std::vector<Fold> folds = stratified_kfold(ds, split.train_all, opts.folds, opts.seed);

  GridResult result;
  result.scores.resize(points.size());
  detail::parallel_for(points.size(), opts.jobs, [&](std::size_t i) {
    result.scores[i] = cross_validate(ds, split, folds, method, points[i], opts);
  });

  double best = -1.0;
  for (const GridPointScore& s : result.scores) {
    if (!s.error.empty()) log_info("grid point " + to_string(s.hyper) + " had failures: " + s.error);
    if (s.score > best) {
      best = s.score;
      result.best = s.hyper;
      result.cv_score = s.score;
    }
  }
  return result;
}

struct DatasetEntry {
  std::string path;
  std::string name;
  LabelColumn label_column = LabelColumn::last;
  bool has_header = false;
  std::vector<std::string> target_classes;  // empty: every class
};

struct BenchmarkConfig {
  std::vector<DatasetEntry> datasets;
  std::vector<MethodVariant> methods;
  int repetitions = 5;
  std::uint64_t seed = 42;
  GridSpec grid;
  int folds = 5;
  double train_frac = 0.7;
  FitOptions fit;
  int jobs = 1;
  // Wall-clock measurements make the report nondeterministic; off by default.
  bool record_timing = false;
};

struct BenchmarkRow {
  std::string dataset;
  std::string target_class;
  MethodVariant method;
  int split_index = 0;
  double gmean = std::numeric_limits<double>::quiet_NaN();
  Hyperparameters selected;
  double cv_score = 0.0;
  double wall_ms = 0.0;
  std::string error;
};

struct BenchmarkCell {
  std::string dataset;
  std::string target_class;
  MethodVariant method;
  std::vector<double> split_gmeans;
  double mean_gmean = std::numeric_limits<double>::quiet_NaN();
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::vector<BenchmarkCell> cells;
};

inline double arithmetic_mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// One seeded split per repetition, grid search on its training portion,
/// final fit on all training targets, test Gmean. The split seed depends
/// only on (seed, repetition) so every method sees the same partitions.
inline BenchmarkRow run_cell_split(const DataSet& ds, const std::string& dataset_name, const std::string& target,
                                   const MethodVariant& method, int rep, const BenchmarkConfig& cfg) {
  BenchmarkRow row;
  row.dataset = dataset_name;
  row.target_class = target;
  row.method = method;
  row.split_index = rep;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const OccSplit split = make_occ_split(ds, target, cfg.train_frac, cfg.seed + static_cast<std::uint64_t>(rep));
    SearchOptions so;
    so.folds = cfg.folds;
    so.seed = derive_seed(cfg.seed, dataset_name + "|" + target + "|rep" + std::to_string(rep));
    so.fit = cfg.fit;
    so.jobs = cfg.jobs;
    const GridResult gr = grid_search(ds, split, cfg.grid, method, so);
    row.selected = gr.best;
    row.cv_score = gr.cv_score;
    FitOptions fo = cfg.fit;
    fo.seed = derive_seed(so.seed, method.to_string() + "|final");
    const TrainedModel model = fit_model(select_columns(ds.features, split.train_target), method, gr.best, fo);
    row.gmean = evaluate_model(model, make_eval_split(ds, split.test_indices, split.target_class));
  } catch (const Error& e) {
    row.error = e.what();
    log_warning(dataset_name + "/" + target + "/" + method.to_string() + " split " + std::to_string(rep) +
                " failed: " + e.what());
  }
  if (cfg.record_timing) {
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return row;
}

inline BenchmarkReport run_benchmark(const std::vector<std::pair<DatasetEntry, DataSet>>& datasets,
                                     const BenchmarkConfig& cfg) {
  if (cfg.repetitions < 1) fail(ErrorKind::InvalidArgument, "repetitions must be >= 1");
  cfg.grid.validate();
  BenchmarkReport report;
  for (const auto& [entry, ds] : datasets) {
    const std::string name = entry.name.empty() ? ds.name : entry.name;
    std::vector<std::string> targets = entry.target_classes.empty() ? ds.class_names : entry.target_classes;
    for (const std::string& target : targets) {
      for (const MethodVariant& method : cfg.methods) {
        BenchmarkCell cell{name, target, method, {}, 0.0};
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
          log_info("benchmark " + name + "/" + target + "/" + method.to_string() + " split " + std::to_string(rep));
          BenchmarkRow row = run_cell_split(ds, name, target, method, rep, cfg);
          cell.split_gmeans.push_back(row.gmean);
          report.rows.push_back(std::move(row));
        }
        cell.mean_gmean = arithmetic_mean(cell.split_gmeans);
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

inline void write_report_csv(std::ostream& os, const BenchmarkReport& report) {
  using detail::format_real;
  os << "dataset,target_class,method,kernel,psi,direction,split_index,gmean,selected_beta,selected_C,"
        "selected_sigma,selected_d,selected_eta,wall_ms\n";
  for (const BenchmarkRow& r : report.rows) {
    const bool sub = r.method.learns_subspace();
    const bool rbf = r.method.kernel == KernelKind::rbf;
    os << r.dataset << ',' << r.target_class << ',' << to_string(r.method.algorithm) << ','
       << to_string(r.method.kernel) << ',' << (sub ? to_string(r.method.psi) : "") << ','
       << (sub ? to_string(r.method.direction) : "") << ',' << r.split_index << ',' << format_real(r.gmean) << ','
       << (sub ? format_real(r.selected.beta) : "") << ',' << format_real(r.selected.C) << ','
       << (rbf ? format_real(r.selected.sigma) : "") << ',' << (sub ? std::to_string(r.selected.d) : "") << ','
       << (sub ? format_real(r.selected.eta) : "") << ',' << format_real(std::round(r.wall_ms)) << '\n';
  }
}

/// Aligned text table: one row per (dataset, method), one column per target
/// class plus the average, mirroring the usual Gmean result tables.
inline void write_report_table(std::ostream& os, const BenchmarkReport& report) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const BenchmarkCell*>> by_dataset;
  for (const BenchmarkCell& c : report.cells) {
    if (!by_dataset.count(c.dataset)) order.push_back(c.dataset);
    by_dataset[c.dataset].push_back(&c);
  }
  auto cellfmt = [](double v) {
    if (std::isnan(v)) return std::string("fail");
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v;
    return s.str();
  };
  for (const std::string& dsname : order) {
    const auto& cells = by_dataset[dsname];
    std::vector<std::string> targets;
    std::vector<std::string> methods;
    for (const BenchmarkCell* c : cells) {
      if (std::find(targets.begin(), targets.end(), c->target_class) == targets.end()) targets.push_back(c->target_class);
      const std::string m = c->method.to_string();
      if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
    }
    std::size_t mw = 6;
    for (const auto& m : methods) mw = std::max(mw, m.size());
    std::size_t cw = 5;
    for (const auto& t : targets) cw = std::max(cw, t.size());

    os << dsname << '\n' << std::left << std::setw(static_cast<int>(mw)) << "method";
    for (const auto& t : targets) os << "  " << std::right << std::setw(static_cast<int>(cw)) << t;
    os << "  " << std::setw(static_cast<int>(cw)) << "Av." << '\n';
    for (const auto& m : methods) {
      os << std::left << std::setw(static_cast<int>(mw)) << m;
      std::vector<double> means;
      for (const auto& t : targets) {
        double v = std::numeric_limits<double>::quiet_NaN();
        for (const BenchmarkCell* c : cells)
          if (c->target_class == t && c->method.to_string() == m) v = c->mean_gmean;
        means.push_back(v);
        os << "  " << std::right << std::setw(static_cast<int>(cw)) << cellfmt(v);
      }
      os << "  " << std::right << std::setw(static_cast<int>(cw)) << cellfmt(arithmetic_mean(means)) << '\n';
    }
    os << '\n';
  }
}

struct TraceRow {
  int split_index = 0;  // -1 marks the across-split average
  int iteration = 0;
  double objective = 0.0;
  double gmean = std::numeric_limits<double>::quiet_NaN();
};

struct TraceOptions {
  int splits = 5;
  std::uint64_t seed = 42;
  double train_frac = 0.7;
  FitOptions fit;
};

/// Train with fixed hyperparameters on each of `splits` seeded partitions and
/// record objective and test Gmean after every iteration, followed by the
/// per-iteration average over splits.
inline std::vector<TraceRow> trace_run(const DataSet& ds, const std::string& target, const MethodVariant& method,
                                       const Hyperparameters& hyper, const TraceOptions& opts) {
  if (opts.splits < 1) fail(ErrorKind::InvalidArgument, "splits must be >= 1");
  std::vector<TraceRow> rows;
  std::vector<std::vector<IterationRecord>> traces;
  for (int s = 0; s < opts.splits; ++s) {
    const OccSplit split = make_occ_split(ds, target, opts.train_frac, opts.seed + static_cast<std::uint64_t>(s));
    const RawEvalSplit eval = make_eval_split(ds, split.test_indices, split.target_class);
    FitOptions fo = opts.fit;
    fo.seed = derive_seed(opts.seed, method.to_string() + "|trace|split" + std::to_string(s));
    const TrainedModel model = fit_model(select_columns(ds.features, split.train_target), method, hyper, fo, &eval);
    for (const IterationRecord& rec : model.trace) rows.push_back(TraceRow{s, rec.iteration, rec.objective, rec.gmean});
    traces.push_back(model.trace);
  }
  const std::size_t len = traces.front().size();
  for (std::size_t t = 0; t < len; ++t) {
    double obj = 0.0;
    double gm = 0.0;
    for (const auto& tr : traces) {
      obj += tr[t].objective;
      gm += tr[t].gmean;
    }
    const double k = static_cast<double>(traces.size());
    rows.push_back(TraceRow{-1, traces.front()[t].iteration, obj / k, gm / k});
  }
  return rows;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "split_index,iteration,objective,gmean\n";
  for (const TraceRow& r : rows) {
    os << (r.split_index < 0 ? std::string("mean") : std::to_string(r.split_index)) << ',' << r.iteration << ','
       << detail::format_real(r.objective) << ',' << detail::format_real(r.gmean) << '\n';
  }
}

}  // namespace ssvdd
