#include "gazelens/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gazelens/error.hpp"

namespace gazelens {
namespace {

bool is_duration(std::size_t m) {
  const auto mm = static_cast<Measure>(m);
  return mm == Measure::TotalGazeDur || mm == Measure::FirstFixDur || mm == Measure::OutSaccDur ||
         mm == Measure::InSaccDur;
}

bool is_normal(std::size_t m) {
  const auto mm = static_cast<Measure>(m);
  return mm == Measure::OutSaccDx || mm == Measure::OutSaccDy || mm == Measure::InSaccDx ||
         mm == Measure::InSaccDy || mm == Measure::FixXScreen;
}

std::string two_digit(std::size_t i, std::size_t total) {
  std::string s = std::to_string(i);
  const std::size_t width = std::to_string(total).size();
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

std::array<MeasureParams, kNumMeasures> SyntheticSpec::default_measures() noexcept {
  std::array<MeasureParams, kNumMeasures> p{};
  auto set = [&](Measure m, double mean, double sd, double d) { p[static_cast<std::size_t>(m)] = {mean, sd, d}; };
  set(Measure::FixXScreen, 0.0, 6.0, 0.0);
  set(Measure::TotalGazeDur, 520.0, 240.0, 0.8);
  set(Measure::FirstLandPos, 0.0, 0.0, 0.0);
  set(Measure::LastLandPos, 0.0, 0.0, 0.0);
  set(Measure::FirstFixDur, 250.0, 80.0, 0.8);
  set(Measure::OutSaccDur, 42.0, 12.0, 0.8);
  // Regressions are leftward saccades, so the regression effect moves dx down.
  set(Measure::OutSaccDx, 40.0, 45.0, -0.3);
  set(Measure::OutSaccDy, 0.0, 8.0, 0.0);
  set(Measure::OutSaccDist, 0.0, 0.0, 0.0);
  set(Measure::InSaccDur, 42.0, 12.0, 0.8);
  set(Measure::InSaccDx, 40.0, 45.0, -0.3);
  set(Measure::InSaccDy, 0.0, 8.0, 0.0);
  return p;
}

void SyntheticSpec::validate() const {
  auto bad = [](const std::string& m) { throw Error("corpus", "invalid synthetic spec: " + m); };
  if (n_subjects == 0) bad("n_subjects must be positive");
  if (n_dyslexic > n_subjects) bad("n_dyslexic exceeds n_subjects");
  if (n_sentences == 0) bad("n_sentences must be positive");
  if (min_words == 0 || min_words > max_words) bad("word-count range must satisfy 1 <= min <= max");
  if (min_retained < 1 || min_retained > max_retained || max_retained > n_sentences)
    bad("retention range must lie within [1, n_sentences]");
  if (!(subject_effect_share >= 0.0 && subject_effect_share < 1.0)) bad("subject_effect_share must be in [0, 1)");
  if (!(skip_probability >= 0.0 && skip_probability < 1.0)) bad("skip_probability must be in [0, 1)");
  if (!(char_width_px > 0.0)) bad("char_width_px must be positive");
  if (std::accumulate(char_count_weights.begin(), char_count_weights.end(), 0.0) <= 0.0 ||
      std::any_of(char_count_weights.begin(), char_count_weights.end(), [](double w) { return w < 0.0; }))
    bad("char_count_weights must be non-negative with positive sum");
  for (std::size_t m = 0; m < kNumMeasures; ++m) {
    const auto& mp = measures[m];
    if (!std::isfinite(mp.effect_size) || !std::isfinite(mp.control_mean) || !std::isfinite(mp.control_std))
      bad("non-finite parameters for " + std::string(measure_names()[m]));
    if (mp.control_std < 0.0) bad("negative control_std for " + std::string(measure_names()[m]));
    if (is_duration(m)) {
      if (!(mp.control_mean > 0.0) || !(mp.control_std > 0.0))
        bad("duration " + std::string(measure_names()[m]) + " needs positive mean and std");
      if (!(mp.control_mean + mp.effect_size * mp.control_std > 0.0))
        bad("effect size drives the dyslexic mean of " + std::string(measure_names()[m]) + " to <= 0");
    }
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Dataset ds;
  std::uniform_int_distribution<std::size_t> word_count(spec.min_words, spec.max_words);
  std::discrete_distribution<int> chars(spec.char_count_weights.begin(), spec.char_count_weights.end());
  for (std::size_t j = 0; j < spec.n_sentences; ++j) {
    SentenceInfo s;
    s.id = std::to_string(j + 1);
    const std::size_t k = word_count(rng);
    for (std::size_t w = 0; w < k; ++w) s.char_counts.push_back(chars(rng) + 1);
    ds.sentences.push_back(std::move(s));
  }

  std::vector<int> labels(spec.n_subjects, 0);
  std::fill_n(labels.begin(), spec.n_dyslexic, 1);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < spec.n_subjects; ++i)
    ds.subjects.push_back(Subject{"sub" + two_digit(i + 1, spec.n_subjects), labels[i]});

  // Log-normal shape per duration measure, matching the original-scale moments.
  std::array<double, kNumMeasures> log_mu{}, log_sigma{};
  for (std::size_t m = 0; m < kNumMeasures; ++m) {
    if (!is_duration(m)) continue;
    const auto& mp = spec.measures[m];
    const double cv2 = (mp.control_std * mp.control_std) / (mp.control_mean * mp.control_mean);
    log_sigma[m] = std::sqrt(std::log1p(cv2));
    log_mu[m] = std::log(mp.control_mean) - 0.5 * log_sigma[m] * log_sigma[m];
  }

  const double shared = std::sqrt(spec.subject_effect_share);
  const double own = std::sqrt(1.0 - spec.subject_effect_share);
  std::uniform_int_distribution<std::size_t> retained(spec.min_retained, spec.max_retained);
  std::vector<std::size_t> order(spec.n_sentences);

  for (const auto& subj : ds.subjects) {
    std::array<double, kNumMeasures> offset{};
    for (double& o : offset) o = normal(rng);
    const std::size_t keep = retained(rng);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));

    for (std::size_t r = 0; r < keep; ++r) {
      const SentenceInfo& sent = ds.sentences[order[r]];
      Trial trial{subj.id, sent.id, {}};
      double chars_before = 0.0;
      for (std::size_t w = 0; w < sent.word_count(); ++w) {
        const int n_chars = sent.char_counts[w];
        ReadingMeasureVector v;
        if (unit(rng) < spec.skip_probability) {
          trial.measures.push_back(v);
          chars_before += n_chars;
          continue;
        }
        std::array<double, kNumMeasures> z{};
        for (std::size_t m = 0; m < kNumMeasures; ++m) z[m] = shared * offset[m] + own * normal(rng);
        std::uniform_int_distribution<int> land(1, n_chars);
        const double first_land = land(rng);
        const double last_land = land(rng);

        for (std::size_t m = 0; m < kNumMeasures; ++m) {
          const auto& mp = spec.measures[m];
          if (is_duration(m)) {
            const double scale = subj.label == 1 ? 1.0 + mp.effect_size * mp.control_std / mp.control_mean : 1.0;
            v[m] = std::exp(log_mu[m] + log_sigma[m] * z[m]) * scale;
          } else if (is_normal(m)) {
            const double shift = subj.label == 1 ? mp.effect_size : 0.0;
            v[m] = mp.control_mean + mp.control_std * (z[m] + shift);
          }
        }
        v[Measure::FixXScreen] += spec.line_left_px + (chars_before + first_land - 0.5) * spec.char_width_px;
        v[Measure::FirstLandPos] = first_land;
        v[Measure::LastLandPos] = last_land;
        v[Measure::TotalGazeDur] = std::max(v[Measure::TotalGazeDur], v[Measure::FirstFixDur]);
        v[Measure::OutSaccDist] = std::hypot(v[Measure::OutSaccDx], v[Measure::OutSaccDy]);
        trial.measures.push_back(v);
        chars_before += n_chars;
      }
      ds.trials.push_back(std::move(trial));
    }
  }
  ds.validate();
  return ds;
}

}  // namespace gazelens
