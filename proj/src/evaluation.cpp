#include "spml/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "spml/io_util.hpp"

namespace spml {

namespace {

// Shared sweep over descending unique thresholds with ties grouped.
template <typename Emit>
void sweep_thresholds(const std::vector<double>& scores, const std::vector<int>& labels,
                      Emit&& emit) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    const double threshold = scores[order[i]];
    std::size_t j = i;
    while (j < n && scores[order[j]] == threshold) {
      if (labels[order[j]] == 1)
        ++tp;
      else
        ++fp;
      ++j;
    }
    emit(threshold, tp, fp);
    i = j;
  }
}

long count_positives(const std::vector<int>& labels) {
  long n_pos = 0;
  for (int y : labels) n_pos += (y == 1) ? 1 : 0;
  return n_pos;
}

}  // namespace

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("average_precision: scores/labels size mismatch");
  const long n_pos = count_positives(labels);
  if (n_pos == 0) throw std::invalid_argument("average_precision: no positive labels");
  double ap = 0.0;
  double recall_prev = 0.0;
  sweep_thresholds(scores, labels, [&](double, long tp, long fp) {
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
  });
  return ap;
}

std::vector<PrPoint> pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("pr_curve: scores/labels size mismatch");
  const long n_pos = count_positives(labels);
  if (n_pos == 0) throw std::invalid_argument("pr_curve: no positive labels");
  std::vector<PrPoint> points;
  sweep_thresholds(scores, labels, [&](double threshold, long tp, long fp) {
    PrPoint p;
    p.threshold = threshold;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    points.push_back(p);
  });
  return points;
}

EvalReport evaluate_scores(const Matrix& scores, const std::vector<const ClipRecord*>& clips,
                           int num_classes, bool filter_applied) {
  if (clips.empty()) throw std::invalid_argument("evaluate: no examples to score");
  EvalReport r;
  r.n_examples_used = clips.size();
  r.filter_applied = filter_applied;
  r.per_class_ap.assign(num_classes, std::numeric_limits<double>::quiet_NaN());
  r.class_has_positives.assign(num_classes, false);
  r.pr_curves.resize(num_classes);
  double ap_sum = 0.0;
  int ap_count = 0;
  std::vector<double> s(clips.size());
  std::vector<int> y(clips.size());
  for (int c = 0; c < num_classes; ++c) {
    bool any_pos = false;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      s[i] = scores(i, c);
      y[i] = clips[i]->labels[c] == LabelState::Positive ? 1 : 0;
      any_pos |= (y[i] == 1);
    }
    r.class_has_positives[c] = any_pos;
    if (!any_pos) continue;  // undefined AP, excluded from the mean
    r.per_class_ap[c] = average_precision(s, y);
    r.pr_curves[c] = pr_curve(s, y);
    ap_sum += r.per_class_ap[c];
    ++ap_count;
  }
  if (ap_count == 0) throw std::invalid_argument("evaluate: every class lacks positives");
  r.map = ap_sum / static_cast<double>(ap_count);
  return r;
}

EvalReport evaluate(const ModelParams& model, const Dataset& test_set, bool filter_fully_labeled) {
  std::vector<const ClipRecord*> keep;
  for (const ClipRecord& c : test_set.clips)
    if (!filter_fully_labeled || c.fully_labeled) keep.push_back(&c);
  if (keep.empty()) throw std::invalid_argument("evaluate: test set empty after filtering");
  Matrix x(keep.size(), test_set.meta.feature_dim);
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (int d = 0; d < test_set.meta.feature_dim; ++d) x(i, d) = keep[i]->features[d];
  ForwardTrace trace = forward(model, x);
  return evaluate_scores(trace.probs, keep, test_set.meta.num_classes, filter_fully_labeled);
}

void save_eval_report(const EvalReport& r, const std::string& path) {
  nlohmann::ordered_json j;
  j["map"] = r.map;
  nlohmann::ordered_json aps = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.per_class_ap.size(); ++c) {
    if (r.class_has_positives[c])
      aps.push_back(r.per_class_ap[c]);
    else
      aps.push_back(nullptr);
  }
  j["per_class_ap"] = std::move(aps);
  j["n_examples_used"] = r.n_examples_used;
  j["filter_applied"] = r.filter_applied;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write eval report: " + path);
  out << j.dump() << '\n';
}

void save_pr_curves_csv(const EvalReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pr curves: " + path);
  out << "class,threshold,precision,recall\n";
  for (std::size_t c = 0; c < r.pr_curves.size(); ++c) {
    for (const PrPoint& p : r.pr_curves[c])
      out << c << ',' << format_double(p.threshold) << ',' << format_double(p.precision) << ','
          << format_double(p.recall) << '\n';
  }
  // class average on a fixed recall grid: precision interpolated per class as
  // the max precision at recall >= r
  for (int g = 1; g <= 100; ++g) {
    const double recall = static_cast<double>(g) / 100.0;
    double sum = 0.0;
    int n = 0;
    for (std::size_t c = 0; c < r.pr_curves.size(); ++c) {
      if (!r.class_has_positives[c]) continue;
      double best = 0.0;
      for (const PrPoint& p : r.pr_curves[c])
        if (p.recall >= recall - 1e-12) best = std::max(best, p.precision);
      sum += best;
      ++n;
    }
    if (n == 0) continue;
    out << "avg," << ',' << format_double(sum / n) << ',' << format_double(recall) << '\n';
  }
}

}  // namespace spml
