#pragma once

#include <array>
#include <cstdint>
#include <cstddef>

#include "gazelens/corpus.hpp"

namespace gazelens {

/// Control-group distribution of one measure plus the dyslexic-group shift,
/// expressed in control standard deviations (signed).
struct MeasureParams {
  double control_mean = 0.0;
  double control_std = 1.0;
  double effect_size = 0.0;
};

/// Parameters of the synthetic reading-study generator.
///
/// Durations are log-normal with the given original-scale mean/std; the
/// dyslexic group is scaled so its mean moves by `effect_size * control_std`.
/// Saccade x/y components are normal. Landing positions are uniform over the
/// word's characters (1-based). fix_x_screen follows the text layout with
/// normal jitter (`control_mean` is an offset). out_sacc_dist is the Euclidean
/// length of (out_sacc_dx, out_sacc_dy); its parameters are unused.
///
/// Each measure has a per-subject latent offset carrying
/// `subject_effect_share` of the per-word latent variance, so words read by
/// the same subject are correlated.
struct SyntheticSpec {
  std::size_t n_subjects = 62;
  std::size_t n_dyslexic = 33;
  std::size_t n_sentences = 60;
  std::size_t min_words = 7;
  std::size_t max_words = 13;
  std::size_t min_retained = 24;
  std::size_t max_retained = 59;
  std::array<MeasureParams, kNumMeasures> measures = default_measures();
  double subject_effect_share = 0.15;
  double skip_probability = 0.08;
  std::array<double, 3> char_count_weights = {38.0, 372.0, 22.0};  // 1-, 2-, 3-character words
  double char_width_px = 24.0;
  double line_left_px = 120.0;
  std::uint64_t seed = 20230101;

  static std::array<MeasureParams, kNumMeasures> default_measures() noexcept;

  /// Throws gazelens::Error("corpus", ...) on an invalid spec.
  void validate() const;
};

/// Pure function of `spec` (seed included).
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace gazelens
