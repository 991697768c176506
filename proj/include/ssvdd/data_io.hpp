#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssvdd/numerics.hpp"

namespace ssvdd {

enum class LabelColumn { first, last, none };

struct DataSet {
  Matrix features;               // D x N, one column per sample
  std::vector<int> labels;       // index into class_names; empty for LabelColumn::none
  std::vector<std::string> class_names;  // in order of first appearance
  std::string name;

  Index dim() const { return features.rows(); }
  Index size() const { return features.cols(); }

  int class_index(const std::string& cls) const {
    const auto it = std::find(class_names.begin(), class_names.end(), cls);
    if (it == class_names.end()) fail(ErrorKind::UnknownClass, "class '" + cls + "' not present in " + name);
    return static_cast<int>(it - class_names.begin());
  }
};

struct OccSplit {
  std::vector<Index> train_target;  // target-class members of the training portion
  std::vector<Index> train_all;     // whole training portion, all classes
  std::vector<Index> test_indices;  // all classes
  int target_class = 0;
  std::uint64_t seed = 0;
};

struct Fold {
  std::vector<Index> train;
  std::vector<Index> validation;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_real(std::string_view field, double& value) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return ec == std::errc() && ptr == field.data() + field.size() && std::isfinite(value);
}

}  // namespace detail

/// Parse CSV text. Rows are samples; one column (first or last) may hold the
/// class label.
inline DataSet parse_csv(std::istream& in, bool has_header, LabelColumn label_column, std::string name = "data") {
  DataSet ds;
  ds.name = std::move(name);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool header_pending = has_header;

  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = detail::split_commas(line);
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      fail(ErrorKind::RaggedRows, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                      " fields, expected " + std::to_string(width));
    }
    const std::size_t label_at = label_column == LabelColumn::first ? 0 : fields.size() - 1;
    if (label_column != LabelColumn::none && fields.size() < 2) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + " has no feature columns");
    }
    std::vector<double> values;
    values.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (label_column != LabelColumn::none && c == label_at) continue;
      double v = 0.0;
      if (!detail::parse_real(fields[c], v)) {
        fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                        ": cannot parse '" + std::string(fields[c]) + "' as a finite number");
      }
      values.push_back(v);
    }
    rows.push_back(std::move(values));
    if (label_column != LabelColumn::none) raw_labels.emplace_back(fields[label_at]);
  }
  if (rows.empty()) fail(ErrorKind::EmptyFile, ds.name + " contains no data rows");

  const Index n = static_cast<Index>(rows.size());
  const Index d = static_cast<Index>(rows.front().size());
  ds.features.resize(d, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) ds.features(j, i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  for (const std::string& l : raw_labels) {
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), l);
    if (it == ds.class_names.end()) {
      ds.class_names.push_back(l);
      it = ds.class_names.end() - 1;
    }
    ds.labels.push_back(static_cast<int>(it - ds.class_names.begin()));
  }
  return ds;
}

inline DataSet load_csv(const std::string& path, bool has_header, LabelColumn label_column) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  return parse_csv(in, has_header, label_column, path);
}

inline Matrix select_columns(const Matrix& x, const std::vector<Index>& idx) {
  Matrix out(x.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = x.col(idx[k]);
  return out;
}

inline std::vector<Index> indices_of_class(const DataSet& ds, int cls) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] == cls) out.push_back(static_cast<Index>(i));
  return out;
}

/// Stratified split: each class is shuffled with one seeded generator (in
/// class_names order) and round(train_frac * n_class) of it goes to training.
/// Only the target-class share of the training portion is used for fitting.
inline OccSplit make_occ_split(const DataSet& ds, const std::string& target, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) fail(ErrorKind::InvalidArgument, "train_frac must lie in (0, 1)");
  OccSplit split;
  split.target_class = ds.class_index(target);
  split.seed = seed;
  std::mt19937_64 rng(seed);
  for (int cls = 0; cls < static_cast<int>(ds.class_names.size()); ++cls) {
    std::vector<Index> members = indices_of_class(ds, cls);
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::lround(train_frac * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k < n_train) {
        split.train_all.push_back(members[k]);
        if (cls == split.target_class) split.train_target.push_back(members[k]);
      } else {
        split.test_indices.push_back(members[k]);
      }
    }
  }
  if (split.train_target.size() < 3) {
    fail(ErrorKind::TooFewSamples, "target class '" + target + "' has " + std::to_string(split.train_target.size()) +
                                       " training samples, need at least 3");
  }
  std::sort(split.train_target.begin(), split.train_target.end());
  std::sort(split.train_all.begin(), split.train_all.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

/// Shuffled k-fold partition; the first n % k folds get one extra element.
inline std::vector<Fold> kfold(const std::vector<Index>& indices, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::InvalidArgument, "k-fold needs k >= 2");
  if (indices.size() < static_cast<std::size_t>(k)) {
    fail(ErrorKind::TooFewSamples, std::to_string(indices.size()) + " samples cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<Index> order = indices;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n = order.size();
  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<Fold> folds(kk);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < kk; ++f) {
    const std::size_t len = n / kk + (f < n % kk ? 1 : 0);
    folds[f].validation.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                               order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  for (std::size_t f = 0; f < kk; ++f) {
    for (std::size_t g = 0; g < kk; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), folds[g].validation.begin(), folds[g].validation.end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
    std::sort(folds[f].validation.begin(), folds[f].validation.end());
  }
  return folds;
}

/// k-fold applied per class and merged fold-by-fold, so every validation
/// fold sees each class with at least floor(n_class / k) members.
inline std::vector<Fold> stratified_kfold(const DataSet& ds, const std::vector<Index>& indices, int k,
                                          std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::InvalidArgument, "k-fold needs k >= 2");
  if (indices.size() < static_cast<std::size_t>(k)) {
    fail(ErrorKind::TooFewSamples, std::to_string(indices.size()) + " samples cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<Fold> merged(static_cast<std::size_t>(k));
  std::size_t offset = 0;
  for (int cls = 0; cls < static_cast<int>(ds.class_names.size()); ++cls) {
    std::vector<Index> members;
    for (Index i : indices)
      if (ds.labels[static_cast<std::size_t>(i)] == cls) members.push_back(i);
    if (members.empty()) continue;
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(cls));
    std::shuffle(members.begin(), members.end(), rng);
    // Rotate where the remainder lands so small classes do not all pile
    // their extra member into fold 0.
    for (std::size_t m = 0; m < members.size(); ++m) {
      const std::size_t f = (m + offset) % static_cast<std::size_t>(k);
      merged[f].validation.push_back(members[m]);
    }
    offset += members.size();
  }
  for (std::size_t f = 0; f < merged.size(); ++f) {
    for (std::size_t g = 0; g < merged.size(); ++g) {
      if (g != f) merged[f].train.insert(merged[f].train.end(), merged[g].validation.begin(), merged[g].validation.end());
    }
    std::sort(merged[f].train.begin(), merged[f].train.end());
    std::sort(merged[f].validation.begin(), merged[f].validation.end());
  }
  return merged;
}

/// Per-feature z-score fitted on one sample set and applied to any other.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    s.mean = x.rowwise().mean();
    const Matrix centered = x.colwise() - s.mean;
    s.scale = (centered.array().square().rowwise().sum() / static_cast<double>(std::max<Index>(1, x.cols())))
                  .sqrt()
                  .matrix();
    for (Index i = 0; i < s.scale.size(); ++i)
      if (!(s.scale(i) > 1e-12)) s.scale(i) = 1.0;
    return s;
  }

  Matrix apply(const Matrix& x) const {
    if (x.rows() != mean.size()) fail(ErrorKind::DimensionMismatch, "standardizer dimension mismatch");
    return (x.colwise() - mean).array().colwise() / scale.array();
  }
};

}  // namespace ssvdd
