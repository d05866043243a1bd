#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gazelens/corpus.hpp"

namespace gazelens::svm {

inline constexpr std::size_t kAggregateWidth = 2 * kNumMeasures;

enum class Scope { Subject, Sentence };

/// [mean of m1..m12, std of m1..m12] over fixated words.
struct AggregatedInstance {
  Eigen::VectorXd features;
  int label = 0;
  std::string subject_id;
  std::string sentence_id;  // empty for subject scope
};

struct Aggregation {
  std::vector<AggregatedInstance> instances;
  std::vector<std::string> warnings;  // dropped instances
};

/// Names of the 24 aggregate features, e.g. "mean_total_gaze_dur".
std::vector<std::string> aggregate_feature_names();

/// Skipped (all-zero) words are excluded; an instance with no fixated word is
/// dropped with a warning. Population std.
Aggregation aggregate_features(const Dataset& dataset, Scope scope);
Aggregation aggregate_features(std::span<const Trial* const> trials, const std::unordered_map<std::string, int>& labels,
                               Scope scope);

/// Rows of `instances` as an n x 24 matrix.
Eigen::MatrixXd feature_matrix(std::span<const AggregatedInstance> instances);
std::vector<int> label_vector(std::span<const AggregatedInstance> instances);

struct SvmOptions {
  double tolerance = 1e-6;      // projected-gradient gap
  std::size_t max_epochs = 2000;
  std::uint64_t seed = 0;       // coordinate order
};

/// Soft-margin linear SVM: minimises 0.5*|w|^2 + 0.5*b^2 + (C/n) * sum hinge_i.
/// The bias is folded in as a constant feature (and regularised with it).
struct LinearSvmModel {
  Eigen::VectorXd weights;            // one per active feature
  double bias = 0.0;
  double C = 1.0;
  std::vector<std::size_t> features;  // indices of the active features in the full space
  std::vector<double> dual_objective;  // after each epoch; non-increasing
  std::size_t epochs = 0;
  bool converged = false;
};

/// Dual coordinate descent. `x` holds standardised features (rows = instances)
/// restricted to `features`, which only labels the result. Throws
/// gazelens::Error("svm", ...) when only one class is present.
LinearSvmModel train_linear_svm(const Eigen::MatrixXd& x, std::span<const int> labels, double C,
                                std::vector<std::size_t> features = {}, const SvmOptions& options = {});

struct SvmPrediction {
  double score = 0.0;
  int label = 0;  // 1 iff score >= 0
};

/// `x` must already be restricted to the model's active features.
SvmPrediction svm_predict(const LinearSvmModel& model, const Eigen::VectorXd& x);
/// Scores rows of a full-width matrix, selecting the model's active features.
std::vector<double> decision_scores(const LinearSvmModel& model, const Eigen::MatrixXd& full_x);

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, std::span<const std::size_t> features);

/// One elimination step: model trained on `features`.
struct RfeStage {
  std::vector<std::size_t> features;
  LinearSvmModel model;
};

/// Retrains and drops the feature with the smallest |w| (ties -> lowest
/// index) until one feature remains. Stage i has (p - i) features.
std::vector<RfeStage> rfe_eliminate(const Eigen::MatrixXd& x, std::span<const int> labels, double C,
                                    const SvmOptions& options = {});

struct RfeResult {
  std::vector<std::size_t> ranking;   // elimination order; last entry survives longest
  std::vector<std::size_t> selected;  // sorted
  std::vector<double> stage_scores;   // callback value per stage
  LinearSvmModel model;
};

/// Callback scores a stage model (typically validation AUC).
using RfeCallback = std::function<double(const LinearSvmModel&)>;

/// Picks the stage with the highest callback score (ties -> fewer features).
RfeResult rfe_rank(const Eigen::MatrixXd& x, std::span<const int> labels, double C, const RfeCallback& inner_eval,
                   const SvmOptions& options = {});

/// Serialises model with feature names and the standardisation stats.
std::string model_to_json(const LinearSvmModel& model, const NormStats& standardization);

}  // namespace gazelens::svm
