#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gazelens/corpus.hpp"
#include "gazelens/nn.hpp"
#include "gazelens/train.hpp"

namespace gazelens {

inline constexpr std::size_t kEmbeddingWidth = 768;
inline constexpr std::size_t kReducedWidth = 20;

struct WordPosition {
  std::string sentence_id;
  std::size_t word_index = 0;

  auto operator<=>(const WordPosition&) const = default;
};

/// Every distinct word position covered by `trials`, sorted.
std::vector<WordPosition> positions_of(std::span<const Trial* const> trials);

/// Contextual word embeddings keyed by word position.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t width = kEmbeddingWidth) : width_(width) {}

  void insert(WordPosition pos, Eigen::VectorXd vec);
  const Eigen::VectorXd& at(std::string_view sentence_id, std::size_t word_index) const;
  const Eigen::VectorXd& at(const WordPosition& pos) const { return at(pos.sentence_id, pos.word_index); }
  bool contains(const WordPosition& pos) const { return entries_.contains(pos); }

  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<WordPosition, Eigen::VectorXd>& entries() const noexcept { return entries_; }

 private:
  std::size_t width_;
  std::map<WordPosition, Eigen::VectorXd> entries_;
};

/// Sidecar `sentence_id,word_index,e1,...,e<width>`. Every manifest position
/// must be present.
EmbeddingTable load_embedding_table(const std::filesystem::path& path, std::span<const SentenceInfo> manifest,
                                    std::size_t width = kEmbeddingWidth);
EmbeddingTable parse_embedding_table(std::string_view text, std::span<const SentenceInfo> manifest,
                                     std::size_t width = kEmbeddingWidth, std::string_view source = "<memory>");
std::string format_embedding_csv(const EmbeddingTable& table);

struct PcaModel {
  Eigen::VectorXd means;       // width
  Eigen::MatrixXd components;  // width x n_components, orthonormal columns
  Eigen::VectorXd eigenvalues;  // descending, population covariance

  std::size_t n_components() const noexcept { return static_cast<std::size_t>(components.cols()); }
};

/// PCA of the embedding vectors at the given (distinct) positions. Each
/// component's largest-magnitude coordinate is made positive.
PcaModel fit_pca(const EmbeddingTable& table, std::span<const WordPosition> positions,
                 std::size_t n_components = kReducedWidth);
Eigen::VectorXd project_pca(const PcaModel& model, const Eigen::VectorXd& vec);

/// Per-position dyslexic-minus-control mean of each measure, over fixated
/// words only. Positions where either class has no fixated word are omitted.
struct MeanDiffTarget {
  WordPosition position;
  Eigen::VectorXd delta;  // kNumMeasures
};
std::vector<MeanDiffTarget> meandiff_targets(std::span<const Trial* const> trials,
                                             const std::unordered_map<std::string, int>& labels,
                                             const NormStats* measure_norm = nullptr);

struct MeanDiffEncoder {
  nn::ModelParams network;  // input width -> 20 (tanh) -> 12
  NormStats input_norm;     // z-scoring of embeddings fitted on the regression inputs
};

/// Trains the 768->20->12 regressor from embeddings to per-word group mean
/// differences. `measure_norm`, when given, is applied to measures before the
/// group means are taken.
MeanDiffEncoder fit_meandiff_encoder(const EmbeddingTable& table, std::span<const Trial* const> train_trials,
                                     const std::unordered_map<std::string, int>& labels,
                                     const nn::RegressionConfig& config, const NormStats* measure_norm = nullptr,
                                     std::size_t hidden = kReducedWidth);
/// Hidden-layer activations (post-tanh).
Eigen::VectorXd encode_meandiff(const MeanDiffEncoder& enc, const Eigen::VectorXd& vec);

struct LinguisticFeatureRow {
  double surprisal = 0.0;  // nats
  std::string pos_tag;
  std::string dep_rel;
  long long head_dist = 0;
  double char_freq = 0.0;  // per million
  double lex_freq = 0.0;   // per million

  bool operator==(const LinguisticFeatureRow&) const = default;
};

class LinguisticTable {
 public:
  void insert(WordPosition pos, LinguisticFeatureRow row);
  const LinguisticFeatureRow& at(std::string_view sentence_id, std::size_t word_index) const;
  const LinguisticFeatureRow& at(const WordPosition& p) const { return at(p.sentence_id, p.word_index); }
  std::size_t size() const noexcept { return rows_.size(); }
  const std::map<WordPosition, LinguisticFeatureRow>& rows() const noexcept { return rows_; }

 private:
  std::map<WordPosition, LinguisticFeatureRow> rows_;
};

/// Sidecar `sentence_id,word_index,surprisal,pos_tag,dep_rel,head_dist,char_freq,lex_freq`.
LinguisticTable load_linguistic_table(const std::filesystem::path& path, std::span<const SentenceInfo> manifest);
LinguisticTable parse_linguistic_table(std::string_view text, std::span<const SentenceInfo> manifest,
                                       std::string_view source = "<memory>");
std::string format_linguistic_csv(const LinguisticTable& table);

/// Fitted vocabularies and numeric scaling for the manual linguistic features.
/// Layout: [surprisal, head_dist, log10(char_freq+1), log10(lex_freq+1)] z-scored,
/// then pos one-hot (+OOV), then dep one-hot (+OOV).
struct ManualFeatureEncoder {
  std::vector<std::string> pos_vocab;  // sorted
  std::vector<std::string> dep_vocab;  // sorted
  NormStats numeric;                   // width 4

  std::size_t width() const noexcept { return 4 + pos_vocab.size() + 1 + dep_vocab.size() + 1; }
};

ManualFeatureEncoder fit_manual_features(const LinguisticTable& table, std::span<const WordPosition> positions);
Eigen::VectorXd encode_manual_features(const ManualFeatureEncoder& enc, const LinguisticFeatureRow& row);
std::vector<Eigen::VectorXd> encode_manual_features(const ManualFeatureEncoder& enc,
                                                    std::span<const LinguisticFeatureRow> rows);

enum class ReprKind { None, EmbedPca, EmbedMeanDiff, Manual };
std::string_view to_string(ReprKind k) noexcept;
std::optional<ReprKind> repr_from_string(std::string_view s) noexcept;

/// A fitted stimulus representation: maps a word position to the vector that
/// is appended to its reading measures.
class StimulusRepr {
 public:
  StimulusRepr() = default;

  static StimulusRepr none();
  static StimulusRepr pca(std::shared_ptr<const EmbeddingTable> table, PcaModel model);
  static StimulusRepr meandiff(std::shared_ptr<const EmbeddingTable> table, MeanDiffEncoder encoder);
  static StimulusRepr manual(std::shared_ptr<const LinguisticTable> table, ManualFeatureEncoder encoder);

  ReprKind kind() const noexcept { return kind_; }
  /// Width of the appended representation (0 for None).
  std::size_t width() const noexcept;
  std::size_t enriched_width() const noexcept { return kNumMeasures + width(); }

  Eigen::VectorXd represent(std::string_view sentence_id, std::size_t word_index) const;

  /// Optional z-scoring of the representation block itself.
  void set_output_norm(NormStats stats) { output_norm_ = std::move(stats); }
  const std::optional<NormStats>& output_norm() const noexcept { return output_norm_; }

  const PcaModel* pca_model() const noexcept { return pca_ ? &*pca_ : nullptr; }
  const MeanDiffEncoder* meandiff_encoder() const noexcept { return meandiff_ ? &*meandiff_ : nullptr; }
  const ManualFeatureEncoder* manual_encoder() const noexcept { return manual_ ? &*manual_ : nullptr; }

  /// Hash over every fitted artifact; equal iff the fitted state is bit-identical.
  std::uint64_t fingerprint() const noexcept;

 private:
  Eigen::VectorXd raw(std::string_view sentence_id, std::size_t word_index) const;

  ReprKind kind_ = ReprKind::None;
  std::shared_ptr<const EmbeddingTable> embeddings_;
  std::shared_ptr<const LinguisticTable> linguistic_;
  std::optional<PcaModel> pca_;
  std::optional<MeanDiffEncoder> meandiff_;
  std::optional<ManualFeatureEncoder> manual_;
  std::optional<NormStats> output_norm_;
};

struct StimulusSources {
  std::shared_ptr<const EmbeddingTable> embeddings;
  std::shared_ptr<const LinguisticTable> linguistic;
};

struct ReprFitOptions {
  nn::RegressionConfig meandiff;  // defaults: 200 epochs, lr 1e-3
  bool normalize_stimulus = false;
};

/// Fits the representation's artifacts from training trials only.
StimulusRepr fit_stimulus_repr(ReprKind kind, const StimulusSources& sources, std::span<const Trial* const> train,
                               const std::unordered_map<std::string, int>& labels, const NormStats& measure_norm,
                               const ReprFitOptions& options);

struct EnrichedSequence {
  std::string subject_id;
  std::string sentence_id;
  int label = 0;
  Eigen::MatrixXd values;  // words x enriched width
};

/// [normalized measures | representation] per word.
std::vector<EnrichedSequence> build_enriched_sequences(std::span<const Trial* const> trials,
                                                       const std::unordered_map<std::string, int>& labels,
                                                       const StimulusRepr& repr, const NormStats& norm);

/// Seeded random sidecars for synthetic runs.
EmbeddingTable synthetic_embeddings(std::span<const SentenceInfo> sentences, std::uint64_t seed,
                                    std::size_t width = kEmbeddingWidth);
LinguisticTable synthetic_linguistic(std::span<const SentenceInfo> sentences, std::uint64_t seed);

}  // namespace gazelens
