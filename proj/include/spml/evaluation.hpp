#pragma once

#include <string>
#include <vector>

#include "spml/labelspace.hpp"
#include "spml/model.hpp"

namespace spml {

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

struct EvalReport {
  std::vector<double> per_class_ap;       // NaN for classes with no positives
  std::vector<bool> class_has_positives;
  double map = 0.0;                       // mean over classes with >= 1 positive
  std::vector<std::vector<PrPoint>> pr_curves;
  std::size_t n_examples_used = 0;
  bool filter_applied = false;
};

// Non-interpolated step-wise average precision with tied scores grouped at a
// single threshold. Requires at least one positive label.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// One point per unique score threshold, descending.
std::vector<PrPoint> pr_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Forward pass over the retained test clips, per-class AP, unweighted mAP.
// With the filter on, only fully labeled clips are scored; with it off,
// Unknown entries count as negatives.
EvalReport evaluate(const ModelParams& model, const Dataset& test_set, bool filter_fully_labeled);

// Same report from precomputed scores; rows align with `clips`.
EvalReport evaluate_scores(const Matrix& scores, const std::vector<const ClipRecord*>& clips,
                           int num_classes, bool filter_applied);

void save_eval_report(const EvalReport& r, const std::string& path);

// CSV (class, threshold, precision, recall). Per-class raw curves first, then
// a class-averaged curve on a fixed recall grid (step 0.01) under the label
// "avg" with an empty threshold column.
void save_pr_curves_csv(const EvalReport& r, const std::string& path);

}  // namespace spml
