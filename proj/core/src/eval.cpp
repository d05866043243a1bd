#include "gazelens/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "gazelens/error.hpp"
#include "gazelens/seed.hpp"
#include "gazelens/text_io.hpp"
#include "gazelens/train.hpp"

namespace gazelens {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("eval", msg); }

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_vector(std::uint64_t& h, const Eigen::VectorXd& v) {
  hash_bytes(h, v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

std::uint64_t hash_norm(const NormStats& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_vector(h, s.mean);
  hash_vector(h, s.std);
  return h;
}

std::uint64_t combine(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

template <class T>
bool on_grid(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

// ---- data plumbing shared by both model families ----

struct Split {
  std::vector<const Trial*> train, held;
};

Split split_trials(const Dataset& d, const FoldAssignment& fa, std::initializer_list<std::size_t> excluded,
                   std::size_t held_fold) {
  Split s;
  for (const auto& t : d.trials) {
    const std::size_t f = fa.fold(t.subject_id);
    if (f == held_fold) s.held.push_back(&t);
    else if (std::find(excluded.begin(), excluded.end(), f) == excluded.end()) s.train.push_back(&t);
  }
  return s;
}

struct Prepared {
  std::vector<Eigen::MatrixXd> x;
  std::vector<double> y;
  std::vector<const Trial*> trials;
};

Prepared prepare(std::span<const Trial* const> trials, const std::unordered_map<std::string, int>& labels,
                 const StimulusRepr& repr, const NormStats& norm) {
  auto seqs = build_enriched_sequences(trials, labels, repr, norm);
  Prepared p;
  p.trials.assign(trials.begin(), trials.end());
  for (auto& s : seqs) {
    p.y.push_back(static_cast<double>(s.label));
    p.x.push_back(std::move(s.values));
  }
  return p;
}

struct Context {
  NormStats norm;
  StimulusRepr repr;
};

Context fit_context(std::span<const Trial* const> train, const std::unordered_map<std::string, int>& labels,
                    const CvOptions& o, std::uint64_t meandiff_seed) {
  Context c;
  c.norm = fit_normalizer(train);
  ReprFitOptions ro = o.repr_options;
  ro.meandiff.seed = meandiff_seed;
  c.repr = fit_stimulus_repr(o.repr, o.sources, train, labels, c.norm, ro);
  return c;
}

double auc_of(std::span<const double> scores, std::span<const double> labels) {
  std::vector<int> y(labels.size());
  std::transform(labels.begin(), labels.end(), y.begin(), [](double v) { return v > 0.5 ? 1 : 0; });
  return roc_auc(scores, y).auc;
}

std::vector<int> int_labels(std::span<const ScoreRow> rows) {
  std::vector<int> y;
  for (const auto& r : rows) y.push_back(r.label);
  return y;
}
std::vector<double> score_values(std::span<const ScoreRow> rows) {
  std::vector<double> s;
  for (const auto& r : rows) s.push_back(r.score);
  return s;
}

std::vector<ScoreRow> subject_rows(std::size_t fold, std::span<const ScoreRow> sentence_rows) {
  std::map<std::string, std::vector<double>> per;
  std::map<std::string, int> label;
  for (const auto& r : sentence_rows) {
    per[r.subject_id].push_back(r.score);
    label[r.subject_id] = r.label;
  }
  std::vector<ScoreRow> out;
  for (const auto& [s, scores] : per) out.push_back({fold, s, "", predict_subject_level(scores), label[s]});
  return out;
}

class Progress {
 public:
  explicit Progress(const CvOptions& o) : fn_(o.progress) {}
  void operator()(const std::string& msg) {
    if (!fn_) return;
    std::lock_guard lock(mu_);
    fn_(msg);
  }

 private:
  std::function<void(const std::string&)> fn_;
  std::mutex mu_;
};

std::vector<std::size_t> evaluated_folds(const CvOptions& o) {
  if (o.test_folds.empty()) {
    std::vector<std::size_t> all(o.folds);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  for (std::size_t t : o.test_folds)
    if (t >= o.folds) fail("test fold " + std::to_string(t) + " out of range");
  return o.test_folds;
}

// ---- neural protocol ----

struct InnerResult {
  std::vector<double> auc;  // per candidate
  std::vector<std::string> warnings;
};

void run_neural(const Dataset& d, const CvOptions& o, CvReport& report, Progress& progress) {
  const auto labels = d.label_map();
  const auto& fa = report.assignment;
  const std::size_t k = o.folds;
  const std::size_t budget = o.model == ClassifierKind::Lstm ? o.lstm_budget : o.cnn_budget;
  if (budget == 0) fail("search budget must be positive");
  const ClassifierKind kind = o.model;
  const std::size_t inner_epochs = o.inner_max_epochs ? o.inner_max_epochs : o.max_epochs;
  const std::size_t inner_patience = o.inner_patience ? o.inner_patience : o.patience;
  const auto tests = evaluated_folds(o);

  std::vector<std::vector<HyperSample>> candidates(k);
  for (std::size_t t : tests)
    candidates[t] = sample_hyperparameters(kind, budget, derive_seed(o.seed, "eval.hyper", {t}), o.lr_sampling);

  struct Job {
    std::size_t t, v;
  };
  std::vector<Job> jobs;
  for (std::size_t t : tests)
    for (std::size_t v = 0; v < k; ++v)
      if (v != t) jobs.push_back({t, v});
  std::vector<InnerResult> inner(jobs.size());
  std::atomic<std::size_t> done{0};

  parallel_for(jobs.size(), o.jobs, [&](std::size_t j) {
    const auto [t, v] = jobs[j];
    Split s = split_trials(d, fa, {t, v}, v);
    Context ctx = fit_context(s.train, labels, o, derive_seed(o.seed, "eval.inner.meandiff", {t, v}));
    const Prepared tr = prepare(s.train, labels, ctx.repr, ctx.norm);
    const Prepared va = prepare(s.held, labels, ctx.repr, ctx.norm);
    InnerResult& r = inner[j];
    for (std::size_t c = 0; c < candidates[t].size(); ++c) {
      const HyperSample& h = candidates[t][c];
      nn::TrainConfig tc;
      tc.batch_size = h.batch_size;
      tc.learning_rate = h.learning_rate;
      tc.max_epochs = inner_epochs;
      tc.patience = inner_patience;
      tc.seed = derive_seed(o.seed, "eval.inner.train", {t, v, c});
      try {
        const auto res = nn::train_classifier(h.arch(ctx.repr.enriched_width()), tr.x, tr.y, va.x, va.y, tc);
        r.auc.push_back(auc_of(nn::predict(res.params, va.x), va.y));
      } catch (const Error& e) {
        if (e.module() != "nn") throw;
        r.auc.push_back(0.0);
        r.warnings.push_back("test fold " + std::to_string(t) + ", validation fold " + std::to_string(v) +
                             ", candidate " + std::to_string(c) + " failed: " + e.what());
      }
    }
    progress("inner " + std::to_string(++done) + "/" + std::to_string(jobs.size()) + " (test " +
             std::to_string(t) + ", validation " + std::to_string(v) + ")");
  });

  // mean validation AUC per candidate and test fold
  std::map<std::size_t, std::vector<double>> mean_auc;
  std::map<std::size_t, std::vector<std::string>> inner_warnings;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& m = mean_auc[jobs[j].t];
    m.resize(candidates[jobs[j].t].size(), 0.0);
    for (std::size_t c = 0; c < m.size(); ++c) m[c] += inner[j].auc[c] / static_cast<double>(k - 1);
    auto& w = inner_warnings[jobs[j].t];
    w.insert(w.end(), inner[j].warnings.begin(), inner[j].warnings.end());
  }

  report.fold_results.resize(tests.size());
  parallel_for(tests.size(), o.jobs, [&](std::size_t i) {
    const std::size_t t = tests[i];
    FoldResult& fr = report.fold_results[i];
    fr.fold = t;
    fr.candidate_auc = mean_auc[t];
    fr.warnings = inner_warnings[t];
    std::vector<std::size_t> order(fr.candidate_auc.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fr.candidate_auc[a] > fr.candidate_auc[b]; });

    fr.earlystop_fold = t == 0 ? 1 : 0;
    Split s = split_trials(d, fa, {t, fr.earlystop_fold}, t);
    std::vector<const Trial*> es;
    for (const auto& tr : d.trials)
      if (fa.fold(tr.subject_id) == fr.earlystop_fold) es.push_back(&tr);
    Context ctx = fit_context(s.train, labels, o, derive_seed(o.seed, "eval.final.meandiff", {t}));
    const Prepared tr = prepare(s.train, labels, ctx.repr, ctx.norm);
    const Prepared ev = prepare(es, labels, ctx.repr, ctx.norm);
    const Prepared te = prepare(s.held, labels, ctx.repr, ctx.norm);

    std::optional<nn::TrainResult> result;
    for (std::size_t c : order) {
      const HyperSample& h = candidates[t][c];
      nn::TrainConfig tc;
      tc.batch_size = h.batch_size;
      tc.learning_rate = h.learning_rate;
      tc.max_epochs = o.max_epochs;
      tc.patience = o.patience;
      tc.seed = derive_seed(o.seed, "eval.final.train", {t});
      try {
        result = nn::train_classifier(h.arch(ctx.repr.enriched_width()), tr.x, tr.y, ev.x, ev.y, tc);
        fr.chosen = h;
        break;
      } catch (const Error& e) {
        if (e.module() != "nn") throw;
        fr.warnings.push_back("final model with candidate " + std::to_string(c) + " failed: " + e.what() +
                              "; trying the next best candidate");
      }
    }
    if (!result) fail("every candidate diverged for test fold " + std::to_string(t));
    fr.best_epoch = result->best_epoch;
    fr.model_fingerprint = result->params.fingerprint();
    fr.artifact_fingerprint = combine(hash_norm(ctx.norm), ctx.repr.fingerprint());

    const auto scores = nn::predict(result->params, te.x);
    for (std::size_t n = 0; n < te.trials.size(); ++n)
      fr.sentence_scores.push_back({t, te.trials[n]->subject_id, te.trials[n]->sentence_id, scores[n],
                                    static_cast<int>(te.y[n])});
    fr.subject_scores = subject_rows(t, fr.sentence_scores);
    fr.has_sentence = fr.has_subject = true;
    progress("final model for test fold " + std::to_string(t) + " (" + fr.chosen->describe() + ")");
  });
}

// ---- baseline protocol ----

struct ScopeData {
  std::vector<svm::AggregatedInstance> instances;
  std::vector<std::size_t> fold;
};

struct Standardized {
  NormStats stats;
  Eigen::MatrixXd train, held;
  std::vector<int> train_y, held_y;
  std::vector<std::size_t> held_index;
};

Standardized standardize(const ScopeData& sd, std::initializer_list<std::size_t> excluded, std::size_t held_fold) {
  std::vector<svm::AggregatedInstance> tr, he;
  Standardized s;
  for (std::size_t i = 0; i < sd.instances.size(); ++i) {
    const std::size_t f = sd.fold[i];
    if (f == held_fold) {
      he.push_back(sd.instances[i]);
      s.held_index.push_back(i);
    } else if (std::find(excluded.begin(), excluded.end(), f) == excluded.end()) {
      tr.push_back(sd.instances[i]);
    }
  }
  const Eigen::MatrixXd xtr = svm::feature_matrix(tr);
  const std::vector<Eigen::MatrixXd> one{xtr};
  s.stats = fit_normalizer(one, svm::kAggregateWidth);
  s.train = apply_normalizer(s.stats, xtr);
  s.held = apply_normalizer(s.stats, svm::feature_matrix(he));
  s.train_y = svm::label_vector(tr);
  s.held_y = svm::label_vector(he);
  return s;
}

struct ScopeFold {
  std::vector<ScoreRow> rows;
  SvmChoice choice;
  std::uint64_t model_fp = 0, artifact_fp = 0;
};

std::vector<ScopeFold> run_scope(const ScopeData& sd, svm::Scope scope, const CvOptions& o,
                                 std::span<const std::size_t> tests, Progress& progress) {
  const std::size_t k = o.folds;
  const std::size_t nc = o.svm_c_grid.size();
  if (nc == 0) fail("empty C grid");
  const std::size_t p = svm::kAggregateWidth;
  const std::string tag = scope == svm::Scope::Subject ? "subject" : "sentence";

  struct Job {
    std::size_t t, v;
  };
  std::vector<Job> jobs;
  for (std::size_t t : tests)
    for (std::size_t v = 0; v < k; ++v)
      if (v != t) jobs.push_back({t, v});
  // auc[j][c][n_features - 1]
  std::vector<std::vector<std::vector<double>>> auc(jobs.size());
  std::atomic<std::size_t> done{0};
  parallel_for(jobs.size(), o.jobs, [&](std::size_t j) {
    const auto [t, v] = jobs[j];
    const Standardized s = standardize(sd, {t, v}, v);
    auc[j].assign(nc, std::vector<double>(p, 0.0));
    for (std::size_t c = 0; c < nc; ++c) {
      svm::SvmOptions so = o.svm;
      so.seed = derive_seed(o.seed, "eval.svm.inner", {t, v, c});
      for (const auto& stage : svm::rfe_eliminate(s.train, s.train_y, o.svm_c_grid[c], so))
        auc[j][c][stage.features.size() - 1] = roc_auc(svm::decision_scores(stage.model, s.held), s.held_y).auc;
    }
    progress("svm " + tag + " inner " + std::to_string(++done) + "/" + std::to_string(jobs.size()));
  });

  const auto names = svm::aggregate_feature_names();
  std::vector<ScopeFold> out(tests.size());
  parallel_for(tests.size(), o.jobs, [&](std::size_t i) {
    const std::size_t t = tests[i];
    std::vector<std::vector<double>> mean(nc, std::vector<double>(p, 0.0));
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].t != t) continue;
      for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t f = 0; f < p; ++f) mean[c][f] += auc[j][c][f] / static_cast<double>(k - 1);
    }
    std::size_t best_c = 0, best_f = 0;
    for (std::size_t f = 0; f < p; ++f)
      for (std::size_t c = 0; c < nc; ++c)
        if (mean[c][f] > mean[best_c][best_f]) best_c = c, best_f = f;

    const Standardized s = standardize(sd, {t}, t);
    svm::SvmOptions so = o.svm;
    so.seed = derive_seed(o.seed, "eval.svm.final", {t});
    auto stages = svm::rfe_eliminate(s.train, s.train_y, o.svm_c_grid[best_c], so);
    const auto& stage = stages[p - 1 - best_f];
    ScopeFold& sf = out[i];
    sf.choice.C = o.svm_c_grid[best_c];
    sf.choice.n_features = best_f + 1;
    sf.choice.validation_auc = mean[best_c][best_f];
    auto selected = stage.features;
    std::sort(selected.begin(), selected.end());
    for (std::size_t f : selected) sf.choice.selected.push_back(names[f]);

    const auto scores = svm::decision_scores(stage.model, s.held);
    for (std::size_t n = 0; n < scores.size(); ++n) {
      const auto& in = sd.instances[s.held_index[n]];
      sf.rows.push_back({t, in.subject_id, in.sentence_id, scores[n], in.label});
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    hash_vector(h, stage.model.weights);
    hash_bytes(h, &stage.model.bias, sizeof(double));
    sf.model_fp = h;
    sf.artifact_fp = hash_norm(s.stats);
  });
  return out;
}

ScopeData scope_data(const Dataset& d, const FoldAssignment& fa, svm::Scope scope, std::vector<std::string>& warnings) {
  auto agg = svm::aggregate_features(d, scope);
  warnings.insert(warnings.end(), agg.warnings.begin(), agg.warnings.end());
  ScopeData sd;
  sd.instances = std::move(agg.instances);
  for (const auto& in : sd.instances) sd.fold.push_back(fa.fold(in.subject_id));
  return sd;
}

void run_baseline(const Dataset& d, const CvOptions& o, CvReport& report, Progress& progress) {
  if (o.repr != ReprKind::None) fail("the SVM baseline takes no stimulus representation");
  const auto tests = evaluated_folds(o);
  report.fold_results.resize(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) report.fold_results[i].fold = tests[i];

  if (o.scope != BaselineScope::Sentence) {
    const auto sd = scope_data(d, report.assignment, svm::Scope::Subject, report.warnings);
    const auto res = run_scope(sd, svm::Scope::Subject, o, tests, progress);
    for (std::size_t i = 0; i < tests.size(); ++i) {
      auto& fr = report.fold_results[i];
      fr.subject_scores = res[i].rows;
      fr.svm_subject = res[i].choice;
      fr.has_subject = true;
      fr.model_fingerprint = combine(fr.model_fingerprint, res[i].model_fp);
      fr.artifact_fingerprint = combine(fr.artifact_fingerprint, res[i].artifact_fp);
    }
  }
  if (o.scope != BaselineScope::Subject) {
    const auto sd = scope_data(d, report.assignment, svm::Scope::Sentence, report.warnings);
    const auto res = run_scope(sd, svm::Scope::Sentence, o, tests, progress);
    for (std::size_t i = 0; i < tests.size(); ++i) {
      auto& fr = report.fold_results[i];
      fr.sentence_scores = res[i].rows;
      fr.svm_sentence = res[i].choice;
      fr.has_sentence = true;
      fr.model_fingerprint = combine(fr.model_fingerprint, res[i].model_fp);
      fr.artifact_fingerprint = combine(fr.artifact_fingerprint, res[i].artifact_fp);
    }
  }
}

void finalize(CvReport& r) {
  const bool baseline = r.options.model == ClassifierKind::Baseline;
  const double fixed = baseline ? 0.0 : 0.5;
  const bool tuned = !baseline && r.options.threshold_policy == ThresholdPolicy::Tuned;
  std::vector<double> sa, ua;
  std::vector<ThresholdMetrics> sf, uf, st, ut;
  for (auto& fr : r.fold_results) {
    const double delta = fr.chosen ? fr.chosen->threshold : fixed;
    if (fr.has_sentence) {
      const auto s = score_values(fr.sentence_scores);
      const auto y = int_labels(fr.sentence_scores);
      fr.sentence_roc = roc_auc(s, y);
      fr.sentence_fixed = threshold_metrics(s, y, fixed);
      fr.sentence_tuned = threshold_metrics(s, y, tuned ? delta : fixed);
      sa.push_back(fr.sentence_roc.auc);
      sf.push_back(fr.sentence_fixed);
      st.push_back(fr.sentence_tuned);
    }
    if (fr.has_subject) {
      const auto s = score_values(fr.subject_scores);
      const auto y = int_labels(fr.subject_scores);
      fr.subject_roc = roc_auc(s, y);
      fr.subject_fixed = threshold_metrics(s, y, fixed);
      fr.subject_tuned = threshold_metrics(s, y, tuned ? delta : fixed);
      ua.push_back(fr.subject_roc.auc);
      uf.push_back(fr.subject_fixed);
      ut.push_back(fr.subject_tuned);
    }
  }
  // The tuned threshold differs per fold; the summary records the mean.
  double mean_delta = 0.0;
  for (const auto& fr : r.fold_results) mean_delta += fr.chosen ? fr.chosen->threshold : fixed;
  if (!r.fold_results.empty()) mean_delta /= static_cast<double>(r.fold_results.size());
  if (!sa.empty()) {
    r.sentence = summarize_folds(sa, sf, fixed);
    if (tuned) r.sentence_tuned = summarize_folds(sa, st, mean_delta);
  }
  if (!ua.empty()) {
    r.subject = summarize_folds(ua, uf, fixed);
    if (tuned) r.subject_tuned = summarize_folds(ua, ut, mean_delta);
  }
  for (const auto* lm : {&r.sentence, &r.subject, &r.sentence_tuned, &r.subject_tuned})
    if (*lm) r.warnings.insert(r.warnings.end(), (*lm)->warnings.begin(), (*lm)->warnings.end());
}

}  // namespace

// ---- folds ----

std::size_t FoldAssignment::fold(const std::string& subject_id) const {
  auto it = fold_of.find(subject_id);
  if (it == fold_of.end()) fail("subject " + subject_id + " has no fold");
  return it->second;
}

FoldAssignment assign_folds(std::span<const Subject> subjects, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail("need at least 2 folds");
  if (subjects.size() < k)
    fail("fewer subjects (" + std::to_string(subjects.size()) + ") than folds (" + std::to_string(k) + ")");
  std::vector<std::string> by_class[2];
  for (const auto& s : subjects) {
    if (s.label != 0 && s.label != 1) fail("subject " + s.id + " has a non-binary label");
    by_class[s.label].push_back(s.id);
  }
  if (by_class[0].empty() || by_class[1].empty()) fail("both classes are required to build folds");
  std::mt19937_64 rng(seed);
  FoldAssignment fa;
  fa.k = k;
  fa.folds.resize(k);
  std::size_t next = 0;
  for (int cls : {1, 0}) {
    auto& ids = by_class[cls];
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    for (const auto& id : ids) {
      if (!fa.fold_of.emplace(id, next).second) fail("duplicate subject " + id);
      fa.folds[next].push_back(id);
      next = (next + 1) % k;
    }
  }
  for (auto& f : fa.folds) std::sort(f.begin(), f.end());
  return fa;
}

FoldAssignment assign_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  return assign_folds(dataset.subjects, k, seed);
}

// ---- search space ----

std::string_view to_string(ClassifierKind k) noexcept {
  switch (k) {
    case ClassifierKind::Baseline: return "baseline";
    case ClassifierKind::Lstm: return "lstm";
    case ClassifierKind::Cnn: return "cnn";
  }
  return "?";
}

std::optional<ClassifierKind> classifier_from_string(std::string_view s) noexcept {
  if (s == "baseline") return ClassifierKind::Baseline;
  if (s == "lstm") return ClassifierKind::Lstm;
  if (s == "cnn") return ClassifierKind::Cnn;
  return std::nullopt;
}

std::string_view to_string(LrSampling s) noexcept { return s == LrSampling::Uniform ? "uniform" : "log_uniform"; }

std::optional<LrSampling> lr_sampling_from_string(std::string_view s) noexcept {
  if (s == "uniform") return LrSampling::Uniform;
  if (s == "log_uniform" || s == "log-uniform") return LrSampling::LogUniform;
  return std::nullopt;
}

std::string_view to_string(ThresholdPolicy p) noexcept { return p == ThresholdPolicy::Tuned ? "tuned" : "fixed"; }

std::string_view to_string(BaselineScope s) noexcept {
  switch (s) {
    case BaselineScope::Subject: return "subject";
    case BaselineScope::Sentence: return "sentence";
    case BaselineScope::Both: return "both";
  }
  return "?";
}

std::optional<BaselineScope> scope_from_string(std::string_view s) noexcept {
  if (s == "subject") return BaselineScope::Subject;
  if (s == "sentence") return BaselineScope::Sentence;
  if (s == "both") return BaselineScope::Both;
  return std::nullopt;
}

SearchSpace draw_search_space(std::uint64_t seed, LrSampling sampling) {
  std::mt19937_64 rng(seed);
  SearchSpace sp;
  std::uniform_real_distribution<double> lr(grid::kLearningRateMin, grid::kLearningRateMax);
  std::uniform_real_distribution<double> log_lr(std::log(grid::kLearningRateMin), std::log(grid::kLearningRateMax));
  for (std::size_t i = 0; i < grid::kLearningRateDraws; ++i) {
    double v = sampling == LrSampling::Uniform ? lr(rng) : std::exp(log_lr(rng));
    sp.learning_rates.push_back(std::clamp(v, grid::kLearningRateMin, grid::kLearningRateMax));
  }
  std::uniform_real_distribution<double> th(grid::kThresholdMin, grid::kThresholdMax);
  for (std::size_t i = 0; i < grid::kThresholdDraws; ++i) sp.thresholds.push_back(th(rng));
  return sp;
}

nn::ArchConfig HyperSample::arch(std::size_t input_width) const {
  if (kind == ClassifierKind::Lstm) {
    nn::LstmConfig c = lstm;
    c.input_width = input_width;
    return c;
  }
  if (kind == ClassifierKind::Cnn) {
    nn::CnnConfig c = cnn;
    c.input_width = input_width;
    return c;
  }
  fail("the baseline has no neural architecture");
}

std::string HyperSample::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == ClassifierKind::Lstm) os << " hidden=" << lstm.hidden_size;
  if (kind == ClassifierKind::Cnn)
    os << " c1=" << cnn.c1_channels << "/" << cnn.c1_kernel << "/" << nn::to_string(cnn.c1_pool) << " c2="
       << cnn.c2_channels << "/" << cnn.c2_kernel << "/" << nn::to_string(cnn.c2_pool) << " l1=" << cnn.l1_size
       << " dropout=" << cnn.dropout;
  os << " batch=" << batch_size << " lr=" << text::format_double(learning_rate)
     << " delta=" << text::format_double(threshold);
  return os.str();
}

std::vector<HyperSample> sample_hyperparameters(ClassifierKind kind, std::size_t budget, std::uint64_t seed,
                                                LrSampling sampling) {
  if (budget == 0) fail("budget must be positive");
  if (kind == ClassifierKind::Baseline) fail("the baseline is tuned over its own C grid");
  const SearchSpace sp = draw_search_space(derive_seed(seed, "eval.space"), sampling);
  std::mt19937_64 rng(derive_seed(seed, "eval.combination"));
  std::vector<HyperSample> out;
  for (std::size_t i = 0; i < budget; ++i) {
    HyperSample h;
    h.kind = kind;
    if (kind == ClassifierKind::Lstm) {
      h.lstm.hidden_size = pick(grid::kLstmHidden, rng);
    } else {
      h.cnn.c1_channels = pick(grid::kC1Channels, rng);
      h.cnn.c1_kernel = pick(grid::kKernels, rng);
      h.cnn.c1_pool = pick(grid::kPools, rng);
      h.cnn.c2_channels = pick(grid::kC2Channels, rng);
      h.cnn.c2_kernel = pick(grid::kKernels, rng);
      h.cnn.c2_pool = pick(grid::kPools, rng);
      h.cnn.l1_size = pick(grid::kL1Sizes, rng);
      h.cnn.dropout = pick(grid::kDropout, rng);
    }
    h.batch_size = pick(grid::kBatchSizes, rng);
    h.learning_rate = pick(sp.learning_rates, rng);
    h.threshold = pick(sp.thresholds, rng);
    out.push_back(h);
  }
  return out;
}

bool in_search_space(const HyperSample& h) {
  if (!on_grid(grid::kBatchSizes, h.batch_size)) return false;
  if (!(h.learning_rate >= grid::kLearningRateMin && h.learning_rate <= grid::kLearningRateMax)) return false;
  if (!(h.threshold >= grid::kThresholdMin && h.threshold <= grid::kThresholdMax)) return false;
  switch (h.kind) {
    case ClassifierKind::Lstm: return on_grid(grid::kLstmHidden, h.lstm.hidden_size);
    case ClassifierKind::Cnn:
      return on_grid(grid::kC1Channels, h.cnn.c1_channels) && on_grid(grid::kKernels, h.cnn.c1_kernel) &&
             on_grid(grid::kPools, h.cnn.c1_pool) && on_grid(grid::kC2Channels, h.cnn.c2_channels) &&
             on_grid(grid::kKernels, h.cnn.c2_kernel) && on_grid(grid::kPools, h.cnn.c2_pool) &&
             on_grid(grid::kL1Sizes, h.cnn.l1_size) && on_grid(grid::kDropout, h.cnn.dropout);
    case ClassifierKind::Baseline: return false;
  }
  return false;
}

// ---- nested cross-validation ----

CvReport nested_cv(const Dataset& dataset, const CvOptions& options) {
  dataset.validate();
  CvReport report;
  report.options = options;
  report.options.progress = nullptr;
  report.options.sources = {};
  report.assignment = assign_folds(dataset, options.folds, derive_seed(options.seed, "eval.folds"));
  Progress progress(options);
  if (options.model == ClassifierKind::Baseline) run_baseline(dataset, options, report, progress);
  else run_neural(dataset, options, report, progress);
  finalize(report);
  for (const auto& fr : report.fold_results)
    for (const auto& w : fr.warnings) report.warnings.push_back(w);
  return report;
}

Dataset permute_labels(const Dataset& dataset, std::uint64_t seed) {
  Dataset out = dataset;
  std::vector<int> labels;
  for (const auto& s : out.subjects) labels.push_back(s.label);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < labels.size(); ++i) out.subjects[i].label = labels[i];
  return out;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  jobs = std::clamp<std::size_t>(jobs, 1, n);
  std::vector<std::exception_ptr> errors(n);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; !stop && (i = next++) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            stop = true;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gazelens
