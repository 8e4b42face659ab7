#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "radfp/error.hpp"

namespace radfp {

/// Confusion counts and derived rates at a fixed cutoff. Rates whose
/// denominator class is absent are left unset instead of dividing 0/0.
struct ConfusionReport {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> youden;
};

/// Prediction rule: score >= cutoff is positive.
inline ConfusionReport confusion_metrics(const std::vector<double>& scores,
                                         const std::vector<int>& labels,
                                         double cutoff) {
  if (scores.size() != labels.size())
    throw invalid_argument("scores/labels length mismatch: " +
                           std::to_string(scores.size()) + " vs " +
                           std::to_string(labels.size()));
  if (scores.empty()) throw invalid_argument("empty score list");

  ConfusionReport r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool pred = scores[i] >= cutoff;
    bool truth = labels[i] != 0;
    if (pred && truth) ++r.tp;
    else if (pred && !truth) ++r.fp;
    else if (!pred && truth) ++r.fn;
    else ++r.tn;
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) /
               static_cast<double>(scores.size());
  if (r.tp + r.fn > 0)
    r.sensitivity = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  if (r.tn + r.fp > 0)
    r.specificity = static_cast<double>(r.tn) / static_cast<double>(r.tn + r.fp);
  if (r.sensitivity && r.specificity)
    r.youden = *r.sensitivity + *r.specificity - 1.0;
  return r;
}

/// Rank-based (Mann-Whitney) AUC; tied scores get half credit. Equals
/// trapezoidal ROC integration.
inline double auc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw invalid_argument("scores/labels length mismatch");
  const std::size_t n = scores.size();

  std::int64_t n_pos = 0;
  for (int l : labels) n_pos += l != 0 ? 1 : 0;
  std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw invalid_argument("auc requires both classes present");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Average ranks across ties, then the U statistic from positive ranks.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  double u = rank_sum_pos -
             static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct YoudenResult {
  double cutoff = 0.0;
  double j = 0.0;
};

/// Exact Youden maximization for probability-like scores: the candidate
/// set is every distinct score plus the boundaries {0, 1}; ties resolve
/// to the smallest cutoff.
inline YoudenResult best_youden(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
  std::int64_t n_pos = 0;
  for (int l : labels) n_pos += l != 0 ? 1 : 0;
  if (n_pos == 0 || static_cast<std::size_t>(n_pos) == labels.size())
    throw invalid_argument("youden requires both classes present");

  std::vector<double> candidates = scores;
  candidates.push_back(0.0);
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  YoudenResult best{candidates.front(), -2.0};
  for (double c : candidates) {
    ConfusionReport r = confusion_metrics(scores, labels, c);
    if (*r.youden > best.j) best = {c, *r.youden};
  }
  return best;
}

}  // namespace radfp
