#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazelens {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the origin

  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

/// Descending-score sweep; tied scores advance TP and FP together.
/// AUC by the trapezoidal rule. Throws gazelens::Error("eval", ...) on
/// single-class input or mismatched sizes.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

struct ThresholdMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  std::optional<double> recall;     // undefined without positives
  std::optional<double> precision;  // undefined without positive predictions
  std::optional<double> f1;
};

/// Predicted label is [score >= threshold].
ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                   double threshold = 0.5);

struct MetricSummary {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n); 0 for n < 2
  std::size_t n = 0;
};

MetricSummary summarize(std::span<const double> values);

struct LevelMetrics {
  MetricSummary auc, accuracy, recall, precision, f1;
  double threshold = 0.5;
  std::vector<std::string> warnings;
};

/// Across-fold summary. Folds with an undefined precision or recall are left
/// out of that metric with a warning. The F1 mean is 2PR/(P+R) of the mean P
/// and R; its standard error is taken over per-fold F1.
LevelMetrics summarize_folds(std::span<const double> fold_auc, std::span<const ThresholdMetrics> fold_metrics,
                             double threshold);

/// Arithmetic mean of a subject's sentence scores.
double predict_subject_level(std::span<const double> sentence_scores);

}  // namespace gazelens
