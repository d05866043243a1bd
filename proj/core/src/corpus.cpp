#include "gazelens/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gazelens/error.hpp"
#include "gazelens/text_io.hpp"

namespace gazelens {
namespace {

constexpr std::array<std::string_view, kNumMeasures> kMeasureNames = {
    "fix_x_screen",  "total_gaze_dur", "first_land_pos", "last_land_pos",
    "first_fix_dur", "out_sacc_dur",   "out_sacc_dx",    "out_sacc_dy",
    "out_sacc_dist", "in_sacc_dur",    "in_sacc_dx",     "in_sacc_dy",
};

[[noreturn]] void fail(const std::string& msg) { throw Error("corpus", msg); }

std::string row_prefix(std::string_view source, std::size_t row) {
  return std::string(source) + " row " + std::to_string(row) + ": ";
}

std::string trial_name(std::string_view subject, std::string_view sentence) {
  return "trial (subject " + std::string(subject) + ", sentence " + std::string(sentence) + ")";
}

int find_column(const std::vector<std::string_view>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

const std::array<std::string_view, kNumMeasures>& measure_names() noexcept { return kMeasureNames; }

std::optional<Measure> measure_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumMeasures; ++i)
    if (kMeasureNames[i] == name) return static_cast<Measure>(i);
  return std::nullopt;
}

bool ReadingMeasureVector::is_skipped() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; });
}

std::optional<std::string> check_measures(const ReadingMeasureVector& v) {
  for (double x : v.values)
    if (!std::isfinite(x)) return "non-finite measure value";
  for (Measure m : {Measure::TotalGazeDur, Measure::FirstFixDur, Measure::OutSaccDur, Measure::InSaccDur}) {
    if (v[m] < 0.0)
      return "negative duration " + std::string(kMeasureNames[static_cast<std::size_t>(m)]);
  }
  if (v[Measure::OutSaccDist] < 0.0) return "negative out_sacc_dist";
  const double total = v[Measure::TotalGazeDur];
  const double first = v[Measure::FirstFixDur];
  if (total > 0.0 && first > 0.0 && total < first * (1.0 - 1e-8))
    return "total_gaze_dur smaller than first_fix_dur";
  const double dist = v[Measure::OutSaccDist];
  if (dist > 0.0) {
    const double bound = std::max(std::abs(v[Measure::OutSaccDx]), std::abs(v[Measure::OutSaccDy]));
    if (dist < bound * (1.0 - 1e-8)) return "out_sacc_dist smaller than its x/y components";
  }
  return std::nullopt;
}

void Dataset::validate() const {
  std::set<std::string_view> subject_ids;
  for (const auto& s : subjects) {
    if (s.label != 0 && s.label != 1) fail("subject " + s.id + " has label outside {0,1}");
    if (!subject_ids.insert(s.id).second) fail("duplicate subject " + s.id);
  }
  std::map<std::string_view, std::size_t> words;
  for (const auto& s : sentences) {
    if (!words.emplace(s.id, s.word_count()).second) fail("duplicate sentence " + s.id);
    if (!s.surface.empty() && s.surface.size() != s.char_counts.size())
      fail("sentence " + s.id + " surface/char_count length mismatch");
  }
  std::set<std::pair<std::string_view, std::string_view>> pairs;
  std::map<std::string_view, std::size_t> per_subject;
  for (const auto& t : trials) {
    if (!subject_ids.contains(t.subject_id))
      fail(trial_name(t.subject_id, t.sentence_id) + " references unknown subject");
    auto it = words.find(t.sentence_id);
    if (it == words.end()) fail(trial_name(t.subject_id, t.sentence_id) + " references unknown sentence");
    if (t.length() != it->second)
      fail(trial_name(t.subject_id, t.sentence_id) + " has " + std::to_string(t.length()) +
           " words but the manifest lists " + std::to_string(it->second));
    if (!pairs.emplace(t.subject_id, t.sentence_id).second)
      fail("duplicate " + trial_name(t.subject_id, t.sentence_id));
    for (std::size_t k = 0; k < t.length(); ++k) {
      if (auto err = check_measures(t.measures[k]))
        fail(trial_name(t.subject_id, t.sentence_id) + " word " + std::to_string(k) + ": " + *err);
    }
    ++per_subject[t.subject_id];
  }
  for (const auto& s : subjects)
    if (!per_subject.contains(s.id)) fail("subject " + s.id + " has no trials");
}

std::unordered_map<std::string, int> Dataset::label_map() const {
  std::unordered_map<std::string, int> out;
  for (const auto& s : subjects) out.emplace(s.id, s.label);
  return out;
}

std::unordered_map<std::string, const SentenceInfo*> Dataset::sentence_map() const {
  std::unordered_map<std::string, const SentenceInfo*> out;
  for (const auto& s : sentences) out.emplace(s.id, &s);
  return out;
}

const SentenceInfo& Dataset::sentence(std::string_view id) const {
  for (const auto& s : sentences)
    if (s.id == id) return s;
  fail("unknown sentence " + std::string(id));
}

std::vector<SentenceInfo> parse_manifest(std::string_view content, std::string_view source) {
  const auto lines = text::split_lines(content);
  if (lines.empty()) fail(std::string(source) + ": empty manifest");
  const auto header = text::split_csv(lines[0]);
  const int c_sent = find_column(header, "sentence_id");
  const int c_word = find_column(header, "word_index");
  const int c_chars = find_column(header, "char_count");
  const int c_surface = find_column(header, "surface");
  for (auto [col, name] : {std::pair{c_sent, "sentence_id"}, {c_word, "word_index"}, {c_chars, "char_count"}})
    if (col < 0) fail(row_prefix(source, 1) + "missing column '" + name + "'");

  std::vector<SentenceInfo> out;
  std::map<std::string, std::size_t, std::less<>> index;
  std::map<std::string, std::map<long long, std::pair<int, std::string>>, std::less<>> rows;
  std::map<std::string, std::size_t, std::less<>> first_row;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const std::size_t row = li + 1;
    const auto f = text::split_csv(lines[li]);
    if (f.size() < header.size())
      fail(row_prefix(source, row) + "expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(f.size()));
    std::string sid(f[c_sent]);
    long long w = 0, chars = 0;
    if (!text::parse_int(f[c_word], w) || w < 0)
      fail(row_prefix(source, row) + "invalid word_index '" + std::string(f[c_word]) + "'");
    if (!text::parse_int(f[c_chars], chars) || chars < 0)
      fail(row_prefix(source, row) + "invalid char_count '" + std::string(f[c_chars]) + "'");
    auto& words = rows[sid];
    if (!index.contains(sid)) {
      index.emplace(sid, out.size());
      out.push_back(SentenceInfo{sid, {}, {}});
      first_row.emplace(sid, row);
    }
    std::string surface = c_surface >= 0 ? std::string(f[c_surface]) : std::string();
    if (!words.emplace(w, std::pair{static_cast<int>(chars), std::move(surface)}).second)
      fail(row_prefix(source, row) + "duplicate entry for sentence " + sid + " word " + std::to_string(w));
  }
  for (auto& s : out) {
    const auto& words = rows[s.id];
    long long expect = 0;
    for (const auto& [w, v] : words) {
      if (w != expect)
        fail(std::string(source) + ": sentence " + s.id + " word_index gap: expected " +
             std::to_string(expect) + ", found " + std::to_string(w));
      s.char_counts.push_back(v.first);
      if (c_surface >= 0) s.surface.push_back(v.second);
      ++expect;
    }
  }
  return out;
}

std::vector<SentenceInfo> load_manifest(const std::filesystem::path& manifest_csv) {
  return parse_manifest(text::read_file(manifest_csv), manifest_csv.string());
}

Dataset parse_dataset(std::string_view content, std::optional<std::vector<SentenceInfo>> manifest,
                      std::string_view source) {
  const auto lines = text::split_lines(content);
  if (lines.empty()) fail(std::string(source) + ": empty dataset file");
  const auto header = text::split_csv(lines[0]);
  const int c_subj = find_column(header, "subject_id");
  const int c_label = find_column(header, "label");
  const int c_sent = find_column(header, "sentence_id");
  const int c_word = find_column(header, "word_index");
  for (auto [col, name] : {std::pair{c_subj, "subject_id"}, {c_label, "label"}, {c_sent, "sentence_id"},
                           {c_word, "word_index"}})
    if (col < 0) fail(row_prefix(source, 1) + "missing column '" + name + "'");
  std::array<int, kNumMeasures> c_meas{};
  for (std::size_t m = 0; m < kNumMeasures; ++m) {
    const std::string generic = "m" + std::to_string(m + 1);
    c_meas[m] = find_column(header, generic);
    if (c_meas[m] < 0) c_meas[m] = find_column(header, kMeasureNames[m]);
    if (c_meas[m] < 0)
      fail(row_prefix(source, 1) + "missing column '" + generic + "' (" + std::string(kMeasureNames[m]) + ")");
  }

  struct Pending {
    std::size_t first_row = 0;
    std::map<long long, std::pair<ReadingMeasureVector, std::size_t>> words;
  };
  Dataset ds;
  std::map<std::string, std::size_t, std::less<>> subject_index;
  std::map<std::pair<std::string, std::string>, std::size_t> trial_index;
  std::vector<Pending> pending;

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const std::size_t row = li + 1;
    const auto f = text::split_csv(lines[li]);
    if (f.size() < header.size())
      fail(row_prefix(source, row) + "expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(f.size()));
    std::string subj(f[c_subj]);
    std::string sent(f[c_sent]);
    if (subj.empty() || sent.empty()) fail(row_prefix(source, row) + "empty identifier");
    long long label = 0, word = 0;
    if (!text::parse_int(f[c_label], label) || (label != 0 && label != 1))
      fail(row_prefix(source, row) + "label must be 0 or 1, got '" + std::string(f[c_label]) + "'");
    if (!text::parse_int(f[c_word], word) || word < 0)
      fail(row_prefix(source, row) + "invalid word_index '" + std::string(f[c_word]) + "'");
    ReadingMeasureVector v;
    for (std::size_t m = 0; m < kNumMeasures; ++m) {
      if (!text::parse_double(f[c_meas[m]], v.values[m]))
        fail(row_prefix(source, row) + "non-numeric value '" + std::string(f[c_meas[m]]) + "' in column " +
             std::string(header[c_meas[m]]));
    }
    if (auto err = check_measures(v)) fail(row_prefix(source, row) + *err);

    auto sit = subject_index.find(subj);
    if (sit == subject_index.end()) {
      subject_index.emplace(subj, ds.subjects.size());
      ds.subjects.push_back(Subject{subj, static_cast<int>(label)});
    } else if (ds.subjects[sit->second].label != label) {
      fail(row_prefix(source, row) + "label of subject " + subj + " is inconsistent with earlier rows");
    }

    auto key = std::pair{subj, sent};
    auto tit = trial_index.find(key);
    if (tit == trial_index.end()) {
      tit = trial_index.emplace(key, ds.trials.size()).first;
      ds.trials.push_back(Trial{subj, sent, {}});
      pending.push_back(Pending{row, {}});
    }
    if (!pending[tit->second].words.emplace(word, std::pair{v, row}).second)
      fail(row_prefix(source, row) + "duplicate row for subject " + subj + ", sentence " + sent + ", word " +
           std::to_string(word));
  }

  for (std::size_t i = 0; i < ds.trials.size(); ++i) {
    auto& t = ds.trials[i];
    long long expect = 0;
    for (const auto& [w, entry] : pending[i].words) {
      if (w != expect)
        fail(row_prefix(source, entry.second) + trial_name(t.subject_id, t.sentence_id) +
             " word_index gap: expected " + std::to_string(expect) + ", found " + std::to_string(w));
      t.measures.push_back(entry.first);
      ++expect;
    }
  }

  if (manifest) {
    ds.sentences = std::move(*manifest);
    const auto known = ds.sentence_map();
    for (std::size_t i = 0; i < ds.trials.size(); ++i) {
      const auto& t = ds.trials[i];
      auto it = known.find(t.sentence_id);
      if (it == known.end())
        fail(row_prefix(source, pending[i].first_row) + trial_name(t.subject_id, t.sentence_id) +
             " references a sentence missing from the manifest");
      if (it->second->word_count() != t.length())
        fail(row_prefix(source, pending[i].first_row) + trial_name(t.subject_id, t.sentence_id) + " has " +
             std::to_string(t.length()) + " words but the manifest lists " +
             std::to_string(it->second->word_count()));
    }
  } else {
    std::map<std::string, std::size_t, std::less<>> order;
    for (const auto& t : ds.trials) {
      auto it = order.find(t.sentence_id);
      if (it == order.end()) {
        order.emplace(t.sentence_id, ds.sentences.size());
        ds.sentences.push_back(SentenceInfo{t.sentence_id, std::vector<int>(t.length(), 0), {}});
      } else if (ds.sentences[it->second].word_count() < t.length()) {
        ds.sentences[it->second].char_counts.assign(t.length(), 0);
      }
    }
  }
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& data_csv,
                     const std::optional<std::filesystem::path>& manifest_csv) {
  std::optional<std::vector<SentenceInfo>> manifest;
  if (manifest_csv) manifest = load_manifest(*manifest_csv);
  return parse_dataset(text::read_file(data_csv), std::move(manifest), data_csv.string());
}

std::string format_dataset_csv(const Dataset& dataset) {
  std::string out = "subject_id,label,sentence_id,word_index";
  for (std::size_t m = 0; m < kNumMeasures; ++m) out += ",m" + std::to_string(m + 1);
  out += '\n';
  const auto labels = dataset.label_map();
  for (const auto& t : dataset.trials) {
    const std::string prefix = t.subject_id + ',' + std::to_string(labels.at(t.subject_id)) + ',' + t.sentence_id + ',';
    for (std::size_t k = 0; k < t.length(); ++k) {
      out += prefix;
      out += std::to_string(k);
      for (double x : t.measures[k].values) {
        out += ',';
        out += text::format_double(x);
      }
      out += '\n';
    }
  }
  return out;
}

std::string format_manifest_csv(std::span<const SentenceInfo> sentences) {
  const bool with_surface =
      std::any_of(sentences.begin(), sentences.end(), [](const SentenceInfo& s) { return !s.surface.empty(); });
  std::string out = with_surface ? "sentence_id,word_index,char_count,surface\n" : "sentence_id,word_index,char_count\n";
  for (const auto& s : sentences) {
    for (std::size_t k = 0; k < s.word_count(); ++k) {
      out += s.id + ',' + std::to_string(k) + ',' + std::to_string(s.char_counts[k]);
      if (with_surface) out += ',' + (k < s.surface.size() ? s.surface[k] : std::string());
      out += '\n';
    }
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& data_csv) {
  text::write_file_atomic(data_csv, format_dataset_csv(dataset));
}

void write_manifest(std::span<const SentenceInfo> sentences, const std::filesystem::path& manifest_csv) {
  text::write_file_atomic(manifest_csv, format_manifest_csv(sentences));
}

Eigen::MatrixXd trial_matrix(const Trial& trial) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(trial.length()), static_cast<Eigen::Index>(kNumMeasures));
  for (std::size_t k = 0; k < trial.length(); ++k)
    for (std::size_t j = 0; j < kNumMeasures; ++j) m(k, j) = trial.measures[k][j];
  return m;
}

NormStats fit_normalizer(std::span<const Eigen::MatrixXd> sequences, std::size_t width) {
  const auto w = static_cast<Eigen::Index>(width);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(w);
  std::size_t n = 0;
  for (const auto& s : sequences) {
    if (s.cols() != w)
      throw Error("corpus", "fit_normalizer: sequence width " + std::to_string(s.cols()) + " != " +
                                std::to_string(width));
    sum += s.colwise().sum().transpose();
    n += static_cast<std::size_t>(s.rows());
  }
  if (n == 0) throw Error("corpus", "fit_normalizer: empty collection");
  NormStats st;
  st.mean = sum / static_cast<double>(n);
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(w);
  for (const auto& s : sequences) ss += (s.rowwise() - st.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  st.std = (ss / static_cast<double>(n)).array().sqrt();
  for (Eigen::Index j = 0; j < w; ++j) {
    if (!(st.std(j) > 1e-12 * std::max(1.0, std::abs(st.mean(j))))) st.std(j) = 1.0;
  }
  return st;
}

NormStats fit_normalizer(std::span<const Trial> trials) {
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(trials.size());
  for (const auto& t : trials) mats.push_back(trial_matrix(t));
  return fit_normalizer(mats, kNumMeasures);
}

NormStats fit_normalizer(std::span<const Trial* const> trials) {
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(trials.size());
  for (const Trial* t : trials) mats.push_back(trial_matrix(*t));
  return fit_normalizer(mats, kNumMeasures);
}

Eigen::MatrixXd apply_normalizer(const NormStats& stats, const Eigen::MatrixXd& sequence) {
  if (static_cast<std::size_t>(sequence.cols()) != stats.width())
    throw Error("corpus", "apply_normalizer: width " + std::to_string(sequence.cols()) + " != stats width " +
                              std::to_string(stats.width()));
  return ((sequence.rowwise() - stats.mean.transpose()).array().rowwise() / stats.std.transpose().array()).matrix();
}

std::vector<Eigen::MatrixXd> apply_normalizer(const NormStats& stats, std::span<const Eigen::MatrixXd> sequences) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(apply_normalizer(stats, s));
  return out;
}

std::vector<Trial> apply_normalizer(const NormStats& stats, std::span<const Trial> trials) {
  if (stats.width() != kNumMeasures)
    throw Error("corpus", "apply_normalizer: stats width " + std::to_string(stats.width()) + " != 12");
  std::vector<Trial> out(trials.begin(), trials.end());
  for (auto& t : out)
    for (auto& v : t.measures)
      for (std::size_t j = 0; j < kNumMeasures; ++j) v[j] = (v[j] - stats.mean(j)) / stats.std(j);
  return out;
}

}  // namespace gazelens
