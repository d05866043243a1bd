#pragma once

#include <string>

#include "gazelens/corpus.hpp"
#include "gazelens/synthetic.hpp"

namespace testutil {

inline gazelens::SyntheticSpec small_spec(std::uint64_t seed = 11) {
  gazelens::SyntheticSpec s;
  s.n_subjects = 12;
  s.n_dyslexic = 6;
  s.n_sentences = 8;
  s.min_retained = 4;
  s.max_retained = 8;
  s.seed = seed;
  return s;
}

inline gazelens::ReadingMeasureVector fixated(double base = 100.0) {
  using gazelens::Measure;
  gazelens::ReadingMeasureVector v;
  v[Measure::FixXScreen] = base;
  v[Measure::TotalGazeDur] = 400;
  v[Measure::FirstLandPos] = 1;
  v[Measure::LastLandPos] = 2;
  v[Measure::FirstFixDur] = 200;
  v[Measure::OutSaccDur] = 40;
  v[Measure::OutSaccDx] = 30;
  v[Measure::OutSaccDy] = 4;
  v[Measure::OutSaccDist] = 31;
  v[Measure::InSaccDur] = 35;
  v[Measure::InSaccDx] = 28;
  v[Measure::InSaccDy] = -2;
  return v;
}

/// Row `subject,label,sentence,word,m1..m12` with every measure set from `fixated`.
inline std::string row(const std::string& subject, int label, const std::string& sentence, int word,
                       const gazelens::ReadingMeasureVector& v = fixated()) {
  std::string r = subject + "," + std::to_string(label) + "," + sentence + "," + std::to_string(word);
  for (double x : v.values) r += "," + std::to_string(x);
  return r + "\n";
}

inline const char* kHeader = "subject_id,label,sentence_id,word_index,m1,m2,m3,m4,m5,m6,m7,m8,m9,m10,m11,m12\n";

}  // namespace testutil
