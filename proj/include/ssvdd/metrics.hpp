#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ssvdd/error.hpp"
#include "ssvdd/svdd.hpp"

namespace ssvdd {

/// Positive means "target class".
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
};

/// Geometric mean of the true-positive and true-negative rates.
inline double gmean(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) fail(ErrorKind::NoPositives, "no target samples in evaluation set");
  if (c.tn + c.fp == 0) fail(ErrorKind::NoNegatives, "no outlier samples in evaluation set");
  const double tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return std::sqrt(tpr * tnr);
}

inline ConfusionCounts confusion(const std::vector<Decision>& decisions, const std::vector<bool>& is_target) {
  if (decisions.size() != is_target.size()) fail(ErrorKind::DimensionMismatch, "decision/label count mismatch");
  ConfusionCounts c;
  for (std::size_t k = 0; k < decisions.size(); ++k) {
    const bool pos = decisions[k].label == Label::positive;
    if (is_target[k]) {
      pos ? ++c.tp : ++c.fn;
    } else {
      pos ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

}  // namespace ssvdd
