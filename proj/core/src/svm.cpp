#include "gazelens/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <json.hpp>

#include "gazelens/error.hpp"

namespace gazelens::svm {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("svm", msg); }

struct Moments {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNumMeasures);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(kNumMeasures);
  std::size_t n = 0;
  std::vector<const ReadingMeasureVector*> words;
};

Eigen::VectorXd finish(const std::vector<const ReadingMeasureVector*>& words) {
  const auto n = static_cast<double>(words.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(kNumMeasures);
  for (const auto* w : words) mean += Eigen::Map<const Eigen::VectorXd>(w->values.data(), kNumMeasures);
  mean /= n;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(kNumMeasures);
  for (const auto* w : words)
    var += (Eigen::Map<const Eigen::VectorXd>(w->values.data(), kNumMeasures) - mean).array().square().matrix();
  Eigen::VectorXd out(kAggregateWidth);
  out.head(kNumMeasures) = mean;
  out.tail(kNumMeasures) = (var / n).array().sqrt().matrix();
  return out;
}

}  // namespace

std::vector<std::string> aggregate_feature_names() {
  std::vector<std::string> names;
  for (auto n : measure_names()) names.push_back("mean_" + std::string(n));
  for (auto n : measure_names()) names.push_back("std_" + std::string(n));
  return names;
}

Aggregation aggregate_features(std::span<const Trial* const> trials, const std::unordered_map<std::string, int>& labels,
                               Scope scope) {
  if (trials.empty()) fail("aggregate_features on an empty trial set");
  Aggregation out;
  auto label_of = [&](const std::string& s) {
    auto it = labels.find(s);
    if (it == labels.end()) fail("no label for subject " + s);
    return it->second;
  };
  if (scope == Scope::Sentence) {
    for (const Trial* t : trials) {
      std::vector<const ReadingMeasureVector*> words;
      for (const auto& w : t->measures)
        if (!w.is_skipped()) words.push_back(&w);
      if (words.empty()) {
        out.warnings.push_back("dropped trial (" + t->subject_id + ", " + t->sentence_id + "): no fixated words");
        continue;
      }
      out.instances.push_back({finish(words), label_of(t->subject_id), t->subject_id, t->sentence_id});
    }
    return out;
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReadingMeasureVector*>> per_subject;
  for (const Trial* t : trials) {
    auto [it, inserted] = per_subject.try_emplace(t->subject_id);
    if (inserted) order.push_back(t->subject_id);
    for (const auto& w : t->measures)
      if (!w.is_skipped()) it->second.push_back(&w);
  }
  for (const auto& s : order) {
    const auto& words = per_subject[s];
    if (words.empty()) {
      out.warnings.push_back("dropped subject " + s + ": no fixated words");
      continue;
    }
    out.instances.push_back({finish(words), label_of(s), s, ""});
  }
  return out;
}

Aggregation aggregate_features(const Dataset& dataset, Scope scope) {
  std::vector<const Trial*> trials;
  for (const auto& t : dataset.trials) trials.push_back(&t);
  return aggregate_features(trials, dataset.label_map(), scope);
}

Eigen::MatrixXd feature_matrix(std::span<const AggregatedInstance> instances) {
  if (instances.empty()) return {};
  Eigen::MatrixXd x(static_cast<Eigen::Index>(instances.size()), instances.front().features.size());
  for (std::size_t i = 0; i < instances.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = instances[i].features.transpose();
  return x;
}

std::vector<int> label_vector(std::span<const AggregatedInstance> instances) {
  std::vector<int> y;
  y.reserve(instances.size());
  for (const auto& in : instances) y.push_back(in.label);
  return y;
}

LinearSvmModel train_linear_svm(const Eigen::MatrixXd& x, std::span<const int> labels, double C,
                                std::vector<std::size_t> features, const SvmOptions& options) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (static_cast<std::size_t>(n) != labels.size()) fail("instance/label count mismatch");
  if (!(C > 0.0)) fail("C must be positive");
  bool seen[2] = {false, false};
  for (int y : labels) {
    if (y != 0 && y != 1) fail("labels must be 0 or 1");
    seen[y] = true;
  }
  if (!seen[0] || !seen[1]) fail("training set contains a single class");
  if (features.empty()) {
    features.resize(static_cast<std::size_t>(p));
    std::iota(features.begin(), features.end(), std::size_t{0});
  } else if (features.size() != static_cast<std::size_t>(p)) {
    fail("feature list does not match matrix width");
  }

  const double upper = C / static_cast<double>(n);
  const Eigen::MatrixXd xt = x.transpose();  // one instance per column
  Eigen::VectorXd y(n), qdiag(n), alpha = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    qdiag(i) = xt.col(i).squaredNorm() + 1.0;
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  double b = 0.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(options.seed);

  LinearSvmModel m;
  m.C = C;
  m.features = std::move(features);
  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i : order) {
      const double g = y(i) * (xt.col(i).dot(w) + b) - 1.0;
      double pg = g;
      if (alpha(i) <= 0.0) pg = std::min(g, 0.0);
      else if (alpha(i) >= upper) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg != 0.0) {
        const double old = alpha(i);
        alpha(i) = std::clamp(old - g / qdiag(i), 0.0, upper);
        const double delta = (alpha(i) - old) * y(i);
        w.noalias() += delta * xt.col(i);
        b += delta;
      }
    }
    m.dual_objective.push_back(0.5 * (w.squaredNorm() + b * b) - alpha.sum());
    m.epochs = epoch;
    if (pg_max - pg_min < options.tolerance) {
      m.converged = true;
      break;
    }
  }
  m.weights = w;
  m.bias = b;
  return m;
}

SvmPrediction svm_predict(const LinearSvmModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.weights.size())
    fail("svm_predict: width " + std::to_string(x.size()) + " != " + std::to_string(model.weights.size()));
  const double s = model.weights.dot(x) + model.bias;
  return {s, s >= 0.0 ? 1 : 0};
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, std::span<const std::size_t> features) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (features[j] >= static_cast<std::size_t>(x.cols())) fail("feature index out of range");
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(features[j]));
  }
  return out;
}

std::vector<double> decision_scores(const LinearSvmModel& model, const Eigen::MatrixXd& full_x) {
  const Eigen::MatrixXd xs = select_columns(full_x, model.features);
  const Eigen::VectorXd s = (xs * model.weights).array() + model.bias;
  return {s.data(), s.data() + s.size()};
}

std::vector<RfeStage> rfe_eliminate(const Eigen::MatrixXd& x, std::span<const int> labels, double C,
                                    const SvmOptions& options) {
  if (x.cols() < 2) fail("RFE needs at least two features");
  std::vector<std::size_t> active(static_cast<std::size_t>(x.cols()));
  std::iota(active.begin(), active.end(), std::size_t{0});
  std::vector<RfeStage> stages;
  while (!active.empty()) {
    LinearSvmModel model = train_linear_svm(select_columns(x, active), labels, C, active, options);
    std::size_t drop = 0;
    for (std::size_t j = 1; j < active.size(); ++j) {
      const double a = std::abs(model.weights(static_cast<Eigen::Index>(j)));
      const double best = std::abs(model.weights(static_cast<Eigen::Index>(drop)));
      if (a < best || (a == best && active[j] < active[drop])) drop = j;
    }
    stages.push_back({active, std::move(model)});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  return stages;
}

RfeResult rfe_rank(const Eigen::MatrixXd& x, std::span<const int> labels, double C, const RfeCallback& inner_eval,
                   const SvmOptions& options) {
  auto stages = rfe_eliminate(x, labels, C, options);
  RfeResult r;
  for (std::size_t s = 0; s + 1 < stages.size(); ++s) {
    const auto& cur = stages[s].features;
    const auto& next = stages[s + 1].features;
    for (std::size_t f : cur)
      if (std::find(next.begin(), next.end(), f) == next.end()) r.ranking.push_back(f);
  }
  r.ranking.push_back(stages.back().features.front());
  std::size_t best = 0;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    r.stage_scores.push_back(inner_eval(stages[s].model));
    if (r.stage_scores[s] >= r.stage_scores[best]) best = s;
  }
  r.selected = stages[best].features;
  std::sort(r.selected.begin(), r.selected.end());
  r.model = std::move(stages[best].model);
  return r;
}

std::string model_to_json(const LinearSvmModel& model, const NormStats& standardization) {
  const auto names = aggregate_feature_names();
  nlohmann::ordered_json j;
  j["C"] = model.C;
  j["bias"] = model.bias;
  std::vector<std::string> selected;
  std::vector<double> mean, std;
  for (std::size_t f : model.features) {
    selected.push_back(f < names.size() ? names[f] : "f" + std::to_string(f));
    if (standardization.width() > f) {
      mean.push_back(standardization.mean(static_cast<Eigen::Index>(f)));
      std.push_back(standardization.std(static_cast<Eigen::Index>(f)));
    }
  }
  j["features"] = selected;
  j["weights"] = std::vector<double>(model.weights.data(), model.weights.data() + model.weights.size());
  j["standardization"] = {{"mean", mean}, {"std", std}};
  j["converged"] = model.converged;
  return j.dump(2);
}

}  // namespace gazelens::svm
