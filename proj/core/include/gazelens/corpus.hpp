#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gazelens {

inline constexpr std::size_t kNumMeasures = 12;

/// Word-level reading measures, in column order m1..m12.
enum class Measure : std::size_t {
  FixXScreen = 0,
  TotalGazeDur,
  FirstLandPos,
  LastLandPos,
  FirstFixDur,
  OutSaccDur,
  OutSaccDx,
  OutSaccDy,
  OutSaccDist,
  InSaccDur,
  InSaccDx,
  InSaccDy,
};

/// Canonical snake_case names, indexed by Measure.
const std::array<std::string_view, kNumMeasures>& measure_names() noexcept;
std::optional<Measure> measure_from_name(std::string_view name) noexcept;

struct ReadingMeasureVector {
  std::array<double, kNumMeasures> values{};

  double& operator[](Measure m) noexcept { return values[static_cast<std::size_t>(m)]; }
  double operator[](Measure m) const noexcept { return values[static_cast<std::size_t>(m)]; }
  double& operator[](std::size_t i) noexcept { return values[i]; }
  double operator[](std::size_t i) const noexcept { return values[i]; }

  /// An all-zero vector encodes a word that received no fixation.
  bool is_skipped() const noexcept;

  bool operator==(const ReadingMeasureVector&) const = default;
};

/// Returns a description of the first violated invariant, if any.
std::optional<std::string> check_measures(const ReadingMeasureVector& v);

struct Trial {
  std::string subject_id;
  std::string sentence_id;
  std::vector<ReadingMeasureVector> measures;  // one per word position, from 0

  std::size_t length() const noexcept { return measures.size(); }
  bool operator==(const Trial&) const = default;
};

struct Subject {
  std::string id;
  int label = 0;  // 0 = control, 1 = dyslexic

  bool operator==(const Subject&) const = default;
};

struct SentenceInfo {
  std::string id;
  std::vector<int> char_counts;      // per word
  std::vector<std::string> surface;  // optional, same length as char_counts when present

  std::size_t word_count() const noexcept { return char_counts.size(); }
  bool operator==(const SentenceInfo&) const = default;
};

struct Dataset {
  std::vector<Subject> subjects;
  std::vector<SentenceInfo> sentences;
  std::vector<Trial> trials;

  /// Throws gazelens::Error naming the first broken invariant.
  void validate() const;

  std::unordered_map<std::string, int> label_map() const;
  std::unordered_map<std::string, const SentenceInfo*> sentence_map() const;
  const SentenceInfo& sentence(std::string_view id) const;

  bool operator==(const Dataset&) const = default;
};

/// Loads a dataset CSV (`subject_id,label,sentence_id,word_index,m1..m12`).
/// With a manifest, every trial length is checked against it; without one the
/// manifest is inferred from the longest trial per sentence (char counts 0).
Dataset load_dataset(const std::filesystem::path& data_csv,
                     const std::optional<std::filesystem::path>& manifest_csv = std::nullopt);

/// Parses from in-memory text; `source` labels error messages.
Dataset parse_dataset(std::string_view data_csv, std::optional<std::vector<SentenceInfo>> manifest,
                      std::string_view source = "<memory>");

std::vector<SentenceInfo> load_manifest(const std::filesystem::path& manifest_csv);
std::vector<SentenceInfo> parse_manifest(std::string_view text, std::string_view source = "<memory>");

std::string format_dataset_csv(const Dataset& dataset);
std::string format_manifest_csv(std::span<const SentenceInfo> sentences);
void write_dataset(const Dataset& dataset, const std::filesystem::path& data_csv);
void write_manifest(std::span<const SentenceInfo> sentences, const std::filesystem::path& manifest_csv);

/// Word-by-measure matrix of one trial (rows = word positions).
Eigen::MatrixXd trial_matrix(const Trial& trial);

/// Per-dimension population mean and std. A constant dimension stores std 1.
struct NormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  std::size_t width() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

NormStats fit_normalizer(std::span<const Eigen::MatrixXd> sequences, std::size_t width);
NormStats fit_normalizer(std::span<const Trial> trials);
NormStats fit_normalizer(std::span<const Trial* const> trials);

Eigen::MatrixXd apply_normalizer(const NormStats& stats, const Eigen::MatrixXd& sequence);
std::vector<Eigen::MatrixXd> apply_normalizer(const NormStats& stats,
                                              std::span<const Eigen::MatrixXd> sequences);
std::vector<Trial> apply_normalizer(const NormStats& stats, std::span<const Trial> trials);

}  // namespace gazelens
