#include "gazelens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gazelens/error.hpp"

namespace gazelens {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("eval", msg); }

}  // namespace

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail("roc_auc: score/label count mismatch");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) fail("roc_auc: labels must be 0 or 1");
    if (!std::isfinite(scores[i])) fail("roc_auc: non-finite score");
    pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) fail("roc_auc: both classes are required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  // Integer counts keep the area exact up to the final division.
  std::size_t tp = 0, fp = 0;
  double twice_area = 0.0;  // in units of one (pos x neg) cell
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp, fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == 1 ? tp : fp) += 1;
    twice_area += static_cast<double>((fp - fp0) * (tp + tp0));
    roc.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos), s});
  }
  roc.auc = twice_area / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) fail("threshold_metrics: score/label count mismatch");
  if (scores.empty()) fail("threshold_metrics: empty input");
  ThresholdMetrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++m.tp;
    else if (predicted) ++m.fp;
    else if (actual) ++m.fn;
    else ++m.tn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(scores.size());
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.recall && m.precision) {
    const double s = *m.recall + *m.precision;
    m.f1 = s > 0.0 ? 2.0 * *m.recall * *m.precision / s : 0.0;
  }
  return m;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std_error = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
  return s;
}

LevelMetrics summarize_folds(std::span<const double> fold_auc, std::span<const ThresholdMetrics> fold_metrics,
                             double threshold) {
  LevelMetrics out;
  out.threshold = threshold;
  out.auc = summarize(fold_auc);
  std::vector<double> acc, rec, prec, f1;
  for (std::size_t f = 0; f < fold_metrics.size(); ++f) {
    const auto& m = fold_metrics[f];
    acc.push_back(m.accuracy);
    if (m.recall) rec.push_back(*m.recall);
    else out.warnings.push_back("fold " + std::to_string(f) + ": recall undefined (no positives), excluded");
    if (m.precision) prec.push_back(*m.precision);
    else out.warnings.push_back("fold " + std::to_string(f) + ": precision undefined (no positive predictions), excluded");
    if (m.f1) f1.push_back(*m.f1);
  }
  out.accuracy = summarize(acc);
  out.recall = summarize(rec);
  out.precision = summarize(prec);
  out.f1 = summarize(f1);
  const double p = out.precision.mean, r = out.recall.mean;
  out.f1.mean = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return out;
}

double predict_subject_level(std::span<const double> sentence_scores) {
  if (sentence_scores.empty()) fail("predict_subject_level: no sentence scores");
  return std::accumulate(sentence_scores.begin(), sentence_scores.end(), 0.0) /
         static_cast<double>(sentence_scores.size());
}

}  // namespace gazelens
