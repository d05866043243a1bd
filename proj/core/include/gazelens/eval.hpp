#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazelens/corpus.hpp"
#include "gazelens/metrics.hpp"
#include "gazelens/nn.hpp"
#include "gazelens/stimulus.hpp"
#include "gazelens/svm.hpp"

namespace gazelens {

// ---- folds ----

struct FoldAssignment {
  std::size_t k = 0;
  std::map<std::string, std::size_t> fold_of;
  std::vector<std::vector<std::string>> folds;  // sorted subject ids per fold

  std::size_t fold(const std::string& subject_id) const;
  bool operator==(const FoldAssignment&) const = default;
};

/// Subjects of each class are shuffled and dealt round-robin; the negative
/// class continues where the positive class stopped.
FoldAssignment assign_folds(std::span<const Subject> subjects, std::size_t k, std::uint64_t seed);
FoldAssignment assign_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed);

// ---- search space ----

enum class ClassifierKind { Baseline, Lstm, Cnn };
std::string_view to_string(ClassifierKind k) noexcept;
std::optional<ClassifierKind> classifier_from_string(std::string_view s) noexcept;

enum class LrSampling { Uniform, LogUniform };
std::string_view to_string(LrSampling s) noexcept;
std::optional<LrSampling> lr_sampling_from_string(std::string_view s) noexcept;

namespace grid {
inline const std::vector<std::size_t> kBatchSizes{8, 16, 32, 64, 128};
inline const std::vector<std::size_t> kLstmHidden{10, 20, 30, 40, 50, 60, 70};
inline const std::vector<std::size_t> kC1Channels{5, 10, 15, 20, 25, 30};
inline const std::vector<std::size_t> kC2Channels{10, 20, 30, 40, 50};
inline const std::vector<std::size_t> kKernels{3, 5};
inline const std::vector<nn::PoolKind> kPools{nn::PoolKind::Average, nn::PoolKind::Max};
inline const std::vector<std::size_t> kL1Sizes{10, 20, 30, 40, 50, 60};
inline const std::vector<double> kDropout{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
inline constexpr std::size_t kLearningRateDraws = 15;
inline constexpr std::size_t kThresholdDraws = 20;
inline constexpr double kLearningRateMin = 1e-5, kLearningRateMax = 1e-1;
inline constexpr double kThresholdMin = 0.35, kThresholdMax = 0.65;
}  // namespace grid

struct SearchSpace {
  std::vector<double> learning_rates;  // 15 draws
  std::vector<double> thresholds;      // 20 draws
};

SearchSpace draw_search_space(std::uint64_t seed, LrSampling sampling = LrSampling::Uniform);

struct HyperSample {
  ClassifierKind kind = ClassifierKind::Lstm;
  nn::LstmConfig lstm;  // used when kind == Lstm
  nn::CnnConfig cnn;    // used when kind == Cnn
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double threshold = 0.5;

  /// Architecture with the given input width.
  nn::ArchConfig arch(std::size_t input_width) const;
  std::string describe() const;
  bool operator==(const HyperSample&) const = default;
};

std::vector<HyperSample> sample_hyperparameters(ClassifierKind kind, std::size_t budget, std::uint64_t seed,
                                                LrSampling sampling = LrSampling::Uniform);

/// True iff every field lies on its grid or inside its continuous range.
bool in_search_space(const HyperSample& sample);

// ---- nested cross-validation ----

enum class ThresholdPolicy { Tuned, Fixed };
enum class BaselineScope { Subject, Sentence, Both };
std::string_view to_string(ThresholdPolicy p) noexcept;
std::string_view to_string(BaselineScope s) noexcept;
std::optional<BaselineScope> scope_from_string(std::string_view s) noexcept;

struct CvOptions {
  ClassifierKind model = ClassifierKind::Lstm;
  ReprKind repr = ReprKind::None;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::size_t lstm_budget = 50;
  std::size_t cnn_budget = 100;
  LrSampling lr_sampling = LrSampling::Uniform;
  ThresholdPolicy threshold_policy = ThresholdPolicy::Tuned;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::size_t inner_max_epochs = 0;  // 0 -> max_epochs
  std::size_t inner_patience = 0;    // 0 -> patience
  ReprFitOptions repr_options;
  StimulusSources sources;
  BaselineScope scope = BaselineScope::Both;
  std::vector<double> svm_c_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  svm::SvmOptions svm;
  std::vector<std::size_t> test_folds;  // empty -> all folds
  std::size_t jobs = 1;
  std::function<void(const std::string&)> progress;  // called under a lock
};

struct ScoreRow {
  std::size_t fold = 0;
  std::string subject_id;
  std::string sentence_id;  // empty for subject rows
  double score = 0.0;
  int label = 0;

  bool operator==(const ScoreRow&) const = default;
};

struct SvmChoice {
  double C = 1.0;
  std::size_t n_features = 0;
  std::vector<std::string> selected;
  double validation_auc = 0.0;
};

struct FoldResult {
  std::size_t fold = 0;
  std::vector<ScoreRow> sentence_scores;
  std::vector<ScoreRow> subject_scores;
  RocCurve sentence_roc, subject_roc;
  ThresholdMetrics sentence_fixed, subject_fixed;  // δ = 0.5 (baseline: score >= 0)
  ThresholdMetrics sentence_tuned, subject_tuned;  // chosen δ
  bool has_sentence = false, has_subject = false;

  // neural
  std::optional<HyperSample> chosen;
  std::vector<double> candidate_auc;  // mean validation AUC per candidate
  std::size_t earlystop_fold = 0;
  std::size_t best_epoch = 0;
  // baseline
  std::optional<SvmChoice> svm_subject, svm_sentence;

  std::uint64_t model_fingerprint = 0;
  std::uint64_t artifact_fingerprint = 0;
  std::vector<std::string> warnings;
};

struct CvReport {
  CvOptions options;  // sources and callbacks are not serialised
  FoldAssignment assignment;
  std::vector<FoldResult> fold_results;
  std::optional<LevelMetrics> sentence, subject;              // fixed threshold
  std::optional<LevelMetrics> sentence_tuned, subject_tuned;  // tuned threshold
  std::vector<std::string> warnings;
};

/// Full nested protocol. Every normaliser, representation and model is fitted
/// on training folds only.
CvReport nested_cv(const Dataset& dataset, const CvOptions& options);

/// Copy with subject labels shuffled among subjects (class counts kept).
Dataset permute_labels(const Dataset& dataset, std::uint64_t seed);

/// Runs fn(0..n-1) on up to `jobs` threads; rethrows the lowest-index failure.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace gazelens
