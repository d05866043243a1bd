#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include "gazelens/eval.hpp"
#include "gazelens/synthetic.hpp"

namespace gazelens {

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path manifest;    // optional
  std::filesystem::path embeddings;  // required for pca / meandiff
  std::filesystem::path linguistic;  // required for manual
  std::filesystem::path output_dir = "out";

  std::uint64_t seed = 1;
  CvOptions cv;  // model, repr, budgets, folds, thresholds, epochs, jobs

  SyntheticSpec synth;
  bool synth_seed_explicit = false;  // otherwise derived from the master seed
  bool synth_embeddings = true;
  bool synth_linguistic = true;
  std::size_t embedding_width = 768;  // embedding sidecar width

  /// Applies the master seed to every derived component.
  void finalize_seeds();
  /// Throws gazelens::Error("cli", ...) when a path required by the chosen
  /// representation is missing or a budget is zero.
  void validate_for_cv() const;
};

/// INI text with sections [paths], [run], [train], [svm], [synth]. Relative
/// paths are resolved against `base_dir`. Unknown keys are errors.
RunConfig parse_run_config(std::string_view ini_text, const std::filesystem::path& base_dir = {});

/// Reads the file and applies the GAZELENS_SEED environment override.
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses a seed override; throws on a malformed value.
void apply_seed_override(RunConfig& config, std::string_view value);

}  // namespace gazelens
