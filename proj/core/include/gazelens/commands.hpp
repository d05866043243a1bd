#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "gazelens/config.hpp"
#include "gazelens/report.hpp"

namespace gazelens {

struct SynthOutputs {
  std::filesystem::path dataset, manifest, embeddings, linguistic;  // empty when not written
};

/// Writes dataset.csv, manifest.csv and the optional sidecars into the output directory.
SynthOutputs cmd_synth(const RunConfig& config);

/// Loads the configured dataset and the sidecars its representation needs.
Dataset load_run_dataset(const RunConfig& config, StimulusSources* sources);

struct CvOutputs {
  CvReport report;
  std::filesystem::path json;
  std::filesystem::path sentence_scores, subject_scores;
  std::filesystem::path sentence_roc, subject_roc;
};

/// Runs nested CV and writes `<stem>.json`, `<stem>_scores_<level>.csv` and
/// `<stem>_roc_<level>.csv` for each level present.
CvOutputs cmd_cv(const RunConfig& config, const std::function<void(const std::string&)>& progress = {});

/// Comparison table (text) for one or more report files. Optionally writes
/// the per-fold ROC polylines and a CSV version of the table.
std::string cmd_report(std::span<const std::filesystem::path> reports,
                       const std::optional<std::filesystem::path>& roc_csv = std::nullopt,
                       const std::optional<std::filesystem::path>& table_csv = std::nullopt);

/// UTC, ISO 8601.
std::string current_timestamp();

}  // namespace gazelens
