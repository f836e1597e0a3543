#pragma once

// Independent reference implementations used only by tests. These deliberately
// avoid the library's code paths so that agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace oracles {

// Average precision by explicit threshold enumeration: for every distinct
// score, count TP/FP with a full pass, then sum precision * recall-increment
// over thresholds in descending order.
inline double brute_force_ap(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
  long n_pos = 0;
  for (int y : labels) n_pos += (y == 1);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double th : thresholds) {
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= th) {
        if (labels[i] == 1)
          ++tp;
        else
          ++fp;
      }
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

// The 80ms/200ms truncation rule, restated from scratch: a box window [s, e]
// (already clipped to [0, T]) yields a positive unless it lasts more than
// 80ms while fitting entirely within the leading or trailing 200ms.
inline bool box_marks_positive(double s, double e, double clip_duration) {
  const double cs = std::max(0.0, s);
  const double ce = std::min(clip_duration, e);
  if (!(cs < ce)) return false;
  const double duration = ce - cs;
  const bool in_head = ce <= 0.2;
  const bool in_tail = cs >= clip_duration - 0.2;
  if (duration > 0.08 && (in_head || in_tail)) return false;
  return true;
}

// High-precision scalar BCE terms evaluated in long double.
inline long double bce_pos_ld(long double p) { return -std::log(p); }
inline long double bce_neg_ld(long double p) { return -std::log(1.0L - p); }

}  // namespace oracles
