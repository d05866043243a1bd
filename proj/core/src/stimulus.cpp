#include "gazelens/stimulus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "gazelens/error.hpp"
#include "gazelens/text_io.hpp"

namespace gazelens {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("stimulus", msg); }

std::string pos_name(std::string_view sentence, std::size_t word) {
  return "sentence " + std::string(sentence) + " word " + std::to_string(word);
}

std::vector<WordPosition> distinct(std::span<const WordPosition> positions) {
  std::vector<WordPosition> out(positions.begin(), positions.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_matrix(std::uint64_t& h, const Eigen::MatrixXd& m) {
  const Eigen::Index dims[2] = {m.rows(), m.cols()};
  hash_bytes(h, dims, sizeof dims);
  hash_bytes(h, m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

void hash_norm(std::uint64_t& h, const NormStats& s) {
  hash_matrix(h, s.mean);
  hash_matrix(h, s.std);
}

void hash_strings(std::uint64_t& h, const std::vector<std::string>& v) {
  for (const auto& s : v) {
    hash_bytes(h, s.data(), s.size());
    hash_bytes(h, "\0", 1);
  }
}

std::array<double, 4> numeric_features(const LinguisticFeatureRow& r) {
  return {r.surprisal, static_cast<double>(r.head_dist), std::log10(r.char_freq + 1.0), std::log10(r.lex_freq + 1.0)};
}

void check_coverage(std::span<const SentenceInfo> manifest, auto&& has, std::string_view what) {
  for (const auto& s : manifest)
    for (std::size_t k = 0; k < s.word_count(); ++k)
      if (!has(WordPosition{s.id, k})) fail("missing " + std::string(what) + " for " + pos_name(s.id, k));
}

}  // namespace

std::vector<WordPosition> positions_of(std::span<const Trial* const> trials) {
  std::set<WordPosition> seen;
  for (const Trial* t : trials)
    for (std::size_t k = 0; k < t->length(); ++k) seen.insert(WordPosition{t->sentence_id, k});
  return {seen.begin(), seen.end()};
}

// ------------------------------------------------------------ embeddings --

void EmbeddingTable::insert(WordPosition pos, Eigen::VectorXd vec) {
  if (static_cast<std::size_t>(vec.size()) != width_)
    fail("embedding for " + pos_name(pos.sentence_id, pos.word_index) + " has width " + std::to_string(vec.size()) +
         ", expected " + std::to_string(width_));
  const std::string name = pos_name(pos.sentence_id, pos.word_index);
  if (!entries_.emplace(std::move(pos), std::move(vec)).second) fail("duplicate embedding for " + name);
}

const Eigen::VectorXd& EmbeddingTable::at(std::string_view sentence_id, std::size_t word_index) const {
  auto it = entries_.find(WordPosition{std::string(sentence_id), word_index});
  if (it == entries_.end()) fail("no embedding for " + pos_name(sentence_id, word_index));
  return it->second;
}

EmbeddingTable parse_embedding_table(std::string_view content, std::span<const SentenceInfo> manifest,
                                     std::size_t width, std::string_view source) {
  EmbeddingTable table(width);
  const auto lines = text::split_lines(content);
  if (lines.empty()) fail(std::string(source) + ": empty embedding file");
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const std::string where = std::string(source) + " row " + std::to_string(li + 1) + ": ";
    const auto f = text::split_csv(lines[li]);
    if (f.size() != width + 2)
      fail(where + "expected " + std::to_string(width) + " embedding values, got " +
           std::to_string(f.size() < 2 ? 0 : f.size() - 2));
    long long w = 0;
    if (!text::parse_int(f[1], w) || w < 0) fail(where + "invalid word_index '" + std::string(f[1]) + "'");
    Eigen::VectorXd v(static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < width; ++i)
      if (!text::parse_double(f[i + 2], v(static_cast<Eigen::Index>(i))))
        fail(where + "non-numeric embedding value '" + std::string(f[i + 2]) + "'");
    try {
      table.insert(WordPosition{std::string(f[0]), static_cast<std::size_t>(w)}, std::move(v));
    } catch (const Error& e) {
      fail(where + e.what());
    }
  }
  check_coverage(manifest, [&](const WordPosition& p) { return table.contains(p); }, "embedding");
  return table;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path, std::span<const SentenceInfo> manifest,
                                    std::size_t width) {
  return parse_embedding_table(text::read_file(path), manifest, width, path.string());
}

std::string format_embedding_csv(const EmbeddingTable& table) {
  std::string out = "sentence_id,word_index";
  for (std::size_t i = 0; i < table.width(); ++i) out += ",e" + std::to_string(i + 1);
  out += '\n';
  for (const auto& [pos, vec] : table.entries()) {
    out += pos.sentence_id + ',' + std::to_string(pos.word_index);
    for (Eigen::Index i = 0; i < vec.size(); ++i) {
      out += ',';
      out += text::format_double(vec(i));
    }
    out += '\n';
  }
  return out;
}

// ------------------------------------------------------------------- PCA --

PcaModel fit_pca(const EmbeddingTable& table, std::span<const WordPosition> positions, std::size_t n_components) {
  const auto pos = distinct(positions);
  if (pos.size() < n_components + 1)
    fail("fit_pca needs at least " + std::to_string(n_components + 1) + " distinct vectors, got " +
         std::to_string(pos.size()));
  if (n_components > table.width()) fail("more components requested than embedding width");
  const auto d = static_cast<Eigen::Index>(table.width());
  const auto n = static_cast<Eigen::Index>(pos.size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = table.at(pos[static_cast<std::size_t>(i)]).transpose();

  PcaModel m;
  m.means = x.colwise().mean().transpose();
  x.rowwise() -= m.means.transpose();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) fail("covariance eigendecomposition did not converge");

  const auto k = static_cast<Eigen::Index>(n_components);
  m.components.resize(d, k);
  m.eigenvalues.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::Index src = d - 1 - c;
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.components.col(c) = v;
    m.eigenvalues(c) = std::max(0.0, eig.eigenvalues()(src));
  }
  return m;
}

Eigen::VectorXd project_pca(const PcaModel& model, const Eigen::VectorXd& vec) {
  if (vec.size() != model.means.size())
    fail("project_pca: width " + std::to_string(vec.size()) + " != " + std::to_string(model.means.size()));
  return model.components.transpose() * (vec - model.means);
}

// ------------------------------------------------------ mean difference --

std::vector<MeanDiffTarget> meandiff_targets(std::span<const Trial* const> trials,
                                             const std::unordered_map<std::string, int>& labels,
                                             const NormStats* measure_norm) {
  struct Acc {
    Eigen::VectorXd sum[2];
    std::size_t count[2] = {0, 0};
  };
  std::map<WordPosition, Acc> acc;
  for (const Trial* t : trials) {
    auto lit = labels.find(t->subject_id);
    if (lit == labels.end()) fail("no label for subject " + t->subject_id);
    const int y = lit->second;
    for (std::size_t k = 0; k < t->length(); ++k) {
      const auto& v = t->measures[k];
      if (v.is_skipped()) continue;
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.values.data(), kNumMeasures);
      if (measure_norm) x = (x - measure_norm->mean).cwiseQuotient(measure_norm->std);
      auto& a = acc[WordPosition{t->sentence_id, k}];
      if (a.count[0] == 0 && a.count[1] == 0) {
        a.sum[0] = Eigen::VectorXd::Zero(kNumMeasures);
        a.sum[1] = Eigen::VectorXd::Zero(kNumMeasures);
      }
      a.sum[y] += x;
      ++a.count[y];
    }
  }
  std::vector<MeanDiffTarget> out;
  for (const auto& [pos, a] : acc) {
    if (a.count[0] == 0 || a.count[1] == 0) continue;
    out.push_back({pos, a.sum[1] / static_cast<double>(a.count[1]) - a.sum[0] / static_cast<double>(a.count[0])});
  }
  return out;
}

MeanDiffEncoder fit_meandiff_encoder(const EmbeddingTable& table, std::span<const Trial* const> train_trials,
                                     const std::unordered_map<std::string, int>& labels,
                                     const nn::RegressionConfig& config, const NormStats* measure_norm,
                                     std::size_t hidden) {
  bool seen[2] = {false, false};
  for (const Trial* t : train_trials) {
    auto it = labels.find(t->subject_id);
    if (it == labels.end()) fail("no label for subject " + t->subject_id);
    seen[it->second] = true;
  }
  if (!seen[0] || !seen[1]) fail("mean-difference encoder needs both classes in the training fold");
  const auto targets = meandiff_targets(train_trials, labels, measure_norm);
  if (targets.empty()) fail("no word position has fixations from both classes");

  const auto d = static_cast<Eigen::Index>(table.width());
  const auto n = static_cast<Eigen::Index>(targets.size());
  Eigen::MatrixXd x(d, n), y(static_cast<Eigen::Index>(kNumMeasures), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = table.at(targets[static_cast<std::size_t>(i)].position);
    y.col(i) = targets[static_cast<std::size_t>(i)].delta;
  }
  MeanDiffEncoder enc;
  const Eigen::MatrixXd rows = x.transpose();
  enc.input_norm = fit_normalizer(std::span<const Eigen::MatrixXd>(&rows, 1), table.width());
  x = (x.colwise() - enc.input_norm.mean).array().colwise() / enc.input_norm.std.array();
  enc.network = nn::train_regressor(nn::FfnConfig{table.width(), hidden, kNumMeasures}, x, y, config);
  return enc;
}

Eigen::VectorXd encode_meandiff(const MeanDiffEncoder& enc, const Eigen::VectorXd& vec) {
  if (static_cast<std::size_t>(vec.size()) != enc.input_norm.width())
    fail("encode_meandiff: width " + std::to_string(vec.size()) + " != " + std::to_string(enc.input_norm.width()));
  const Eigen::VectorXd z = (vec - enc.input_norm.mean).cwiseQuotient(enc.input_norm.std);
  return nn::ffn_forward(enc.network, z).hidden;
}

// ------------------------------------------------------ manual features --

void LinguisticTable::insert(WordPosition pos, LinguisticFeatureRow row) {
  if (!(row.surprisal >= 0.0)) fail("negative surprisal at " + pos_name(pos.sentence_id, pos.word_index));
  if (row.dep_rel == "ROOT" && row.head_dist != 0)
    fail("syntactic root with non-zero head distance at " + pos_name(pos.sentence_id, pos.word_index));
  if (row.char_freq < 0.0 || row.lex_freq < 0.0)
    fail("negative frequency at " + pos_name(pos.sentence_id, pos.word_index));
  const std::string name = pos_name(pos.sentence_id, pos.word_index);
  if (!rows_.emplace(std::move(pos), std::move(row)).second) fail("duplicate linguistic row for " + name);
}

const LinguisticFeatureRow& LinguisticTable::at(std::string_view sentence_id, std::size_t word_index) const {
  auto it = rows_.find(WordPosition{std::string(sentence_id), word_index});
  if (it == rows_.end()) fail("no linguistic features for " + pos_name(sentence_id, word_index));
  return it->second;
}

LinguisticTable parse_linguistic_table(std::string_view content, std::span<const SentenceInfo> manifest,
                                       std::string_view source) {
  const auto lines = text::split_lines(content);
  if (lines.empty()) fail(std::string(source) + ": empty linguistic feature file");
  LinguisticTable table;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const std::string where = std::string(source) + " row " + std::to_string(li + 1) + ": ";
    const auto f = text::split_csv(lines[li]);
    if (f.size() != 8) fail(where + "expected 8 fields, got " + std::to_string(f.size()));
    long long w = 0;
    LinguisticFeatureRow r;
    if (!text::parse_int(f[1], w) || w < 0) fail(where + "invalid word_index");
    if (!text::parse_double(f[2], r.surprisal)) fail(where + "non-numeric surprisal");
    r.pos_tag = std::string(f[3]);
    r.dep_rel = std::string(f[4]);
    if (!text::parse_int(f[5], r.head_dist)) fail(where + "non-integer head_dist");
    if (!text::parse_double(f[6], r.char_freq)) fail(where + "non-numeric char_freq");
    if (!text::parse_double(f[7], r.lex_freq)) fail(where + "non-numeric lex_freq");
    try {
      table.insert(WordPosition{std::string(f[0]), static_cast<std::size_t>(w)}, std::move(r));
    } catch (const Error& e) {
      fail(where + e.what());
    }
  }
  check_coverage(manifest, [&](const WordPosition& p) { return table.rows().contains(p); }, "linguistic features");
  return table;
}

LinguisticTable load_linguistic_table(const std::filesystem::path& path, std::span<const SentenceInfo> manifest) {
  return parse_linguistic_table(text::read_file(path), manifest, path.string());
}

std::string format_linguistic_csv(const LinguisticTable& table) {
  std::string out = "sentence_id,word_index,surprisal,pos_tag,dep_rel,head_dist,char_freq,lex_freq\n";
  for (const auto& [p, r] : table.rows()) {
    out += p.sentence_id + ',' + std::to_string(p.word_index) + ',' + text::format_double(r.surprisal) + ',' +
           r.pos_tag + ',' + r.dep_rel + ',' + std::to_string(r.head_dist) + ',' + text::format_double(r.char_freq) +
           ',' + text::format_double(r.lex_freq) + '\n';
  }
  return out;
}

ManualFeatureEncoder fit_manual_features(const LinguisticTable& table, std::span<const WordPosition> positions) {
  const auto pos = distinct(positions);
  if (pos.empty()) fail("fit_manual_features needs at least one position");
  std::set<std::string> pos_tags, deps;
  Eigen::MatrixXd numeric(static_cast<Eigen::Index>(pos.size()), 4);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto& r = table.at(pos[i]);
    pos_tags.insert(r.pos_tag);
    deps.insert(r.dep_rel);
    const auto nf = numeric_features(r);
    for (int j = 0; j < 4; ++j) numeric(static_cast<Eigen::Index>(i), j) = nf[static_cast<std::size_t>(j)];
  }
  ManualFeatureEncoder enc;
  enc.pos_vocab.assign(pos_tags.begin(), pos_tags.end());
  enc.dep_vocab.assign(deps.begin(), deps.end());
  enc.numeric = fit_normalizer(std::span<const Eigen::MatrixXd>(&numeric, 1), 4);
  return enc;
}

Eigen::VectorXd encode_manual_features(const ManualFeatureEncoder& enc, const LinguisticFeatureRow& row) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(enc.width()));
  const auto nf = numeric_features(row);
  for (Eigen::Index j = 0; j < 4; ++j) out(j) = (nf[static_cast<std::size_t>(j)] - enc.numeric.mean(j)) / enc.numeric.std(j);
  auto slot = [](const std::vector<std::string>& vocab, const std::string& v) {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), v);
    return it != vocab.end() && *it == v ? static_cast<std::size_t>(it - vocab.begin()) : vocab.size();
  };
  const std::size_t pos_base = 4;
  const std::size_t dep_base = pos_base + enc.pos_vocab.size() + 1;
  out(static_cast<Eigen::Index>(pos_base + slot(enc.pos_vocab, row.pos_tag))) = 1.0;
  out(static_cast<Eigen::Index>(dep_base + slot(enc.dep_vocab, row.dep_rel))) = 1.0;
  return out;
}

std::vector<Eigen::VectorXd> encode_manual_features(const ManualFeatureEncoder& enc,
                                                    std::span<const LinguisticFeatureRow> rows) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(encode_manual_features(enc, r));
  return out;
}

// -------------------------------------------------------- representation --

std::string_view to_string(ReprKind k) noexcept {
  switch (k) {
    case ReprKind::None: return "none";
    case ReprKind::EmbedPca: return "pca";
    case ReprKind::EmbedMeanDiff: return "meandiff";
    case ReprKind::Manual: return "manual";
  }
  return "?";
}

std::optional<ReprKind> repr_from_string(std::string_view s) noexcept {
  for (ReprKind k : {ReprKind::None, ReprKind::EmbedPca, ReprKind::EmbedMeanDiff, ReprKind::Manual})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

StimulusRepr StimulusRepr::none() { return StimulusRepr{}; }

StimulusRepr StimulusRepr::pca(std::shared_ptr<const EmbeddingTable> table, PcaModel model) {
  if (!table) fail("PCA representation needs an embedding table");
  StimulusRepr r;
  r.kind_ = ReprKind::EmbedPca;
  r.embeddings_ = std::move(table);
  r.pca_ = std::move(model);
  return r;
}

StimulusRepr StimulusRepr::meandiff(std::shared_ptr<const EmbeddingTable> table, MeanDiffEncoder encoder) {
  if (!table) fail("mean-difference representation needs an embedding table");
  StimulusRepr r;
  r.kind_ = ReprKind::EmbedMeanDiff;
  r.embeddings_ = std::move(table);
  r.meandiff_ = std::move(encoder);
  return r;
}

StimulusRepr StimulusRepr::manual(std::shared_ptr<const LinguisticTable> table, ManualFeatureEncoder encoder) {
  if (!table) fail("manual representation needs a linguistic feature table");
  StimulusRepr r;
  r.kind_ = ReprKind::Manual;
  r.linguistic_ = std::move(table);
  r.manual_ = std::move(encoder);
  return r;
}

std::size_t StimulusRepr::width() const noexcept {
  switch (kind_) {
    case ReprKind::None: return 0;
    case ReprKind::EmbedPca: return pca_->n_components();
    case ReprKind::EmbedMeanDiff: return static_cast<std::size_t>(meandiff_->network[nn::ffn_slot::kW1].rows());
    case ReprKind::Manual: return manual_->width();
  }
  return 0;
}

Eigen::VectorXd StimulusRepr::raw(std::string_view sentence_id, std::size_t word_index) const {
  switch (kind_) {
    case ReprKind::None: return {};
    case ReprKind::EmbedPca: return project_pca(*pca_, embeddings_->at(sentence_id, word_index));
    case ReprKind::EmbedMeanDiff: return encode_meandiff(*meandiff_, embeddings_->at(sentence_id, word_index));
    case ReprKind::Manual: return encode_manual_features(*manual_, linguistic_->at(sentence_id, word_index));
  }
  return {};
}

Eigen::VectorXd StimulusRepr::represent(std::string_view sentence_id, std::size_t word_index) const {
  Eigen::VectorXd v = raw(sentence_id, word_index);
  if (output_norm_) v = (v - output_norm_->mean).cwiseQuotient(output_norm_->std);
  return v;
}

std::uint64_t StimulusRepr::fingerprint() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const int k = static_cast<int>(kind_);
  hash_bytes(h, &k, sizeof k);
  if (pca_) {
    hash_matrix(h, pca_->means);
    hash_matrix(h, pca_->components);
    hash_matrix(h, pca_->eigenvalues);
  }
  if (meandiff_) {
    const std::uint64_t f = meandiff_->network.fingerprint();
    hash_bytes(h, &f, sizeof f);
    hash_norm(h, meandiff_->input_norm);
  }
  if (manual_) {
    hash_strings(h, manual_->pos_vocab);
    hash_strings(h, manual_->dep_vocab);
    hash_norm(h, manual_->numeric);
  }
  if (output_norm_) hash_norm(h, *output_norm_);
  return h;
}

StimulusRepr fit_stimulus_repr(ReprKind kind, const StimulusSources& sources, std::span<const Trial* const> train,
                               const std::unordered_map<std::string, int>& labels, const NormStats& measure_norm,
                               const ReprFitOptions& options) {
  const auto positions = positions_of(train);
  StimulusRepr repr;
  switch (kind) {
    case ReprKind::None: return StimulusRepr::none();
    case ReprKind::EmbedPca:
      if (!sources.embeddings) fail("repr 'pca' requires an embedding sidecar");
      repr = StimulusRepr::pca(sources.embeddings, fit_pca(*sources.embeddings, positions));
      break;
    case ReprKind::EmbedMeanDiff:
      if (!sources.embeddings) fail("repr 'meandiff' requires an embedding sidecar");
      repr = StimulusRepr::meandiff(
          sources.embeddings, fit_meandiff_encoder(*sources.embeddings, train, labels, options.meandiff, &measure_norm));
      break;
    case ReprKind::Manual:
      if (!sources.linguistic) fail("repr 'manual' requires a linguistic feature sidecar");
      repr = StimulusRepr::manual(sources.linguistic, fit_manual_features(*sources.linguistic, positions));
      break;
  }
  if (options.normalize_stimulus) {
    Eigen::MatrixXd block(static_cast<Eigen::Index>(positions.size()), static_cast<Eigen::Index>(repr.width()));
    for (std::size_t i = 0; i < positions.size(); ++i)
      block.row(static_cast<Eigen::Index>(i)) = repr.represent(positions[i].sentence_id, positions[i].word_index).transpose();
    repr.set_output_norm(fit_normalizer(std::span<const Eigen::MatrixXd>(&block, 1), repr.width()));
  }
  return repr;
}

std::vector<EnrichedSequence> build_enriched_sequences(std::span<const Trial* const> trials,
                                                       const std::unordered_map<std::string, int>& labels,
                                                       const StimulusRepr& repr, const NormStats& norm) {
  if (norm.width() != kNumMeasures) fail("measure normalizer must have width 12");
  const auto extra = static_cast<Eigen::Index>(repr.width());
  std::map<std::pair<std::string, std::size_t>, Eigen::MatrixXd> cache;  // (sentence, length)
  std::vector<EnrichedSequence> out;
  out.reserve(trials.size());
  for (const Trial* t : trials) {
    auto lit = labels.find(t->subject_id);
    if (lit == labels.end()) fail("no label for subject " + t->subject_id);
    const auto len = static_cast<Eigen::Index>(t->length());
    EnrichedSequence es{t->subject_id, t->sentence_id, lit->second,
                        Eigen::MatrixXd(len, static_cast<Eigen::Index>(kNumMeasures) + extra)};
    es.values.leftCols(kNumMeasures) = apply_normalizer(norm, trial_matrix(*t));
    if (extra > 0) {
      auto key = std::pair{t->sentence_id, t->length()};
      auto it = cache.find(key);
      if (it == cache.end()) {
        Eigen::MatrixXd block(len, extra);
        for (Eigen::Index k = 0; k < len; ++k) {
          const Eigen::VectorXd v = repr.represent(t->sentence_id, static_cast<std::size_t>(k));
          if (v.size() != extra) fail("representation width changed within " + t->sentence_id);
          block.row(k) = v.transpose();
        }
        it = cache.emplace(std::move(key), std::move(block)).first;
      }
      es.values.rightCols(extra) = it->second;
    }
    out.push_back(std::move(es));
  }
  return out;
}

// -------------------------------------------------------- synthetic sidecars --

EmbeddingTable synthetic_embeddings(std::span<const SentenceInfo> sentences, std::uint64_t seed, std::size_t width) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(width);
  auto draw = [&] {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
    return v;
  };
  // Word-length prototypes plus a per-sentence context vector give the table
  // low-rank structure on top of isotropic noise.
  std::vector<Eigen::VectorXd> length_proto;
  for (int i = 0; i < 4; ++i) length_proto.push_back(draw());
  EmbeddingTable table(width);
  for (const auto& s : sentences) {
    const Eigen::VectorXd context = draw();
    for (std::size_t k = 0; k < s.word_count(); ++k) {
      const int len = std::clamp(s.char_counts[k], 0, 3);
      table.insert(WordPosition{s.id, k}, 0.8 * length_proto[static_cast<std::size_t>(len)] + 0.5 * context + 0.6 * draw());
    }
  }
  return table;
}

LinguisticTable synthetic_linguistic(std::span<const SentenceInfo> sentences, std::uint64_t seed) {
  static constexpr std::array<const char*, 7> kPos = {"NOUN", "VERB", "ADJ", "ADV", "PRON", "PART", "NUM"};
  static constexpr std::array<const char*, 6> kDep = {"nsubj", "obj", "advmod", "amod", "mark", "nummod"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LinguisticTable table;
  for (const auto& s : sentences) {
    const std::size_t n = s.word_count();
    std::uniform_int_distribution<std::size_t> pick_root(0, n == 0 ? 0 : n - 1);
    const std::size_t root = pick_root(rng);
    for (std::size_t k = 0; k < n; ++k) {
      LinguisticFeatureRow r;
      r.surprisal = std::abs(6.0 + 2.5 * normal(rng));
      r.pos_tag = kPos[std::uniform_int_distribution<std::size_t>(0, kPos.size() - 1)(rng)];
      if (k == root) {
        r.dep_rel = "ROOT";
        r.head_dist = 0;
      } else {
        r.dep_rel = kDep[std::uniform_int_distribution<std::size_t>(0, kDep.size() - 1)(rng)];
        r.head_dist = static_cast<long long>(root) - static_cast<long long>(k);
      }
      r.char_freq = std::exp(5.0 + 1.5 * normal(rng));
      r.lex_freq = std::exp(3.0 + 2.0 * normal(rng));
      table.insert(WordPosition{s.id, k}, std::move(r));
    }
  }
  return table;
}

}  // namespace gazelens
