#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "gazelens/error.hpp"
#include "gazelens/metrics.hpp"
#include "gazelens/svm.hpp"
#include "gazelens/synthetic.hpp"
#include "helpers.hpp"

using namespace gazelens;
using namespace gazelens::svm;

namespace {

// Two informative columns (0 and 1), the rest noise.
void informative_set(std::size_t n, std::size_t noise, std::uint64_t seed, Eigen::MatrixXd& x, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 + noise));
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    y[i] = label;
    const double s = label ? 1.0 : -1.0;
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = s * 1.2 + 0.5 * nd(rng);
    x(r, 1) = s * 0.9 + 0.5 * nd(rng);
    for (std::size_t j = 0; j < noise; ++j) x(r, static_cast<Eigen::Index>(2 + j)) = nd(rng);
  }
}

double accuracy(const LinearSvmModel& m, const Eigen::MatrixXd& x, std::span<const int> y) {
  std::size_t ok = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    ok += svm_predict(m, x.row(i).transpose()).label == y[static_cast<std::size_t>(i)];
  return static_cast<double>(ok) / static_cast<double>(x.rows());
}

}  // namespace

TEST_SUITE("svm") {
  TEST_CASE("symmetric pair is split at the origin") {
    Eigen::MatrixXd x(2, 1);
    x << -1.0, 1.0;
    const std::vector<int> y{0, 1};
    const auto m = train_linear_svm(x, y, 10.0);
    CHECK(m.converged);
    CHECK(m.weights(0) > 0.0);
    CHECK(std::abs(m.bias) < 1e-6);
    CHECK(svm_predict(m, Eigen::VectorXd::Constant(1, -1e-3)).label == 0);
    CHECK(svm_predict(m, Eigen::VectorXd::Constant(1, 1e-3)).label == 1);
  }

  TEST_CASE("separable set is fit perfectly") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(200, 0, 5, x, y);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) += y[static_cast<std::size_t>(i)] ? 2.0 : -2.0;
    const auto m = train_linear_svm(x, y, 100.0);
    CHECK(accuracy(m, x, y) == 1.0);
  }

  TEST_CASE("dual objective never increases") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(60, 4, 2, x, y);
    const auto m = train_linear_svm(x, y, 1.0);
    REQUIRE(m.dual_objective.size() == m.epochs);
    for (std::size_t i = 1; i < m.dual_objective.size(); ++i)
      CHECK(m.dual_objective[i] <= m.dual_objective[i - 1] + 1e-12);
  }

  TEST_CASE("solution is a local minimum of the primal objective") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(80, 3, 9, x, y);
    const double C = 0.7;
    const auto m = train_linear_svm(x, y, C);
    const auto n = static_cast<double>(x.rows());
    const auto primal = [&](const Eigen::VectorXd& w, double b) {
      double hinge = 0.0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double yi = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - yi * (x.row(i).dot(w) + b));
      }
      return 0.5 * (w.squaredNorm() + b * b) + C / n * hinge;
    };
    const double p0 = primal(m.weights, m.bias);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd d(x.cols());
      for (auto& v : d) v = nd(rng);
      const double db = nd(rng);
      CHECK(p0 <= primal(m.weights + 1e-3 * d, m.bias + 1e-3 * db) + 1e-7);
    }
    CHECK(m.converged);
  }

  TEST_CASE("duplicating the data leaves the model unchanged") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(40, 2, 4, x, y);
    Eigen::MatrixXd x2(2 * x.rows(), x.cols());
    x2 << x, x;
    std::vector<int> y2 = y;
    y2.insert(y2.end(), y.begin(), y.end());
    SvmOptions o;
    o.tolerance = 1e-10;
    o.max_epochs = 20000;
    const auto a = train_linear_svm(x, y, 1.0, {}, o);
    const auto b = train_linear_svm(x2, y2, 1.0, {}, o);
    CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(std::abs(a.bias - b.bias) < 1e-5);
  }

  TEST_CASE("training is deterministic and single-class input is rejected") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(30, 2, 4, x, y);
    SvmOptions o;
    o.seed = 77;
    const auto a = train_linear_svm(x, y, 1.0, {}, o);
    const auto b = train_linear_svm(x, y, 1.0, {}, o);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    std::vector<int> ones(y.size(), 1);
    CHECK_THROWS_AS(train_linear_svm(x, ones, 1.0), Error);
    CHECK_THROWS_AS(train_linear_svm(x, std::vector<int>{1, 0}, 1.0), Error);
  }

  TEST_CASE("prediction checks the width and decision_scores selects columns") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(30, 3, 4, x, y);
    const std::vector<std::size_t> cols{1, 3};
    const auto m = train_linear_svm(select_columns(x, cols), y, 1.0, cols);
    CHECK_THROWS_AS(svm_predict(m, Eigen::VectorXd::Zero(5)), Error);
    const auto s = decision_scores(m, x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double direct = m.weights(0) * x(i, 1) + m.weights(1) * x(i, 3) + m.bias;
      CHECK(s[static_cast<std::size_t>(i)] == doctest::Approx(direct).epsilon(1e-14));
    }
  }

  TEST_CASE("RFE drops the smallest weight each stage") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(60, 4, 8, x, y);
    const auto stages = rfe_eliminate(x, y, 1.0);
    REQUIRE(stages.size() == 6);
    for (std::size_t s = 0; s + 1 < stages.size(); ++s) {
      const auto& st = stages[s];
      CHECK(st.features.size() == 6 - s);
      Eigen::Index arg = 0;
      st.model.weights.cwiseAbs().minCoeff(&arg);
      auto next = st.features;
      next.erase(next.begin() + arg);
      CHECK(stages[s + 1].features == next);
    }
  }

  TEST_CASE("RFE keeps the informative features") {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Eigen::MatrixXd x;
      std::vector<int> y;
      informative_set(200, 8, seed, x, y);
      const auto stages = rfe_eliminate(x, y, 1.0);
      const auto& two = stages[stages.size() - 2].features;
      hits += two == std::vector<std::size_t>{0, 1};
    }
    CHECK(hits >= 9);
  }

  TEST_CASE("rfe_rank prefers fewer features on ties") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(40, 3, 3, x, y);
    const auto r = rfe_rank(x, y, 1.0, [](const LinearSvmModel&) { return 0.5; });
    CHECK(r.selected.size() == 1);
    CHECK(r.ranking.size() == 5);
    CHECK(r.stage_scores.size() == 5);
    const auto r2 = rfe_rank(x, y, 1.0, [](const LinearSvmModel& m) { return m.features.size() == 3 ? 1.0 : 0.0; });
    CHECK(r2.selected.size() == 3);
    CHECK(r2.model.features == r2.selected);
  }

  TEST_CASE("aggregation excludes skipped words and uses population std") {
    Dataset d;
    d.subjects = {{"a", 1}, {"b", 0}};
    d.sentences = {{"s1", {3, 4, 5}, {}}};
    ReadingMeasureVector skipped;
    auto v1 = testutil::fixated(100), v2 = testutil::fixated(200);
    d.trials = {{"a", "s1", {v1, skipped, v2}}, {"b", "s1", {v1, v1, v1}}};
    const auto agg = aggregate_features(d, Scope::Sentence);
    REQUIRE(agg.instances.size() == 2);
    const auto& a = agg.instances[0];
    CHECK(a.subject_id == "a");
    CHECK(a.label == 1);
    CHECK(a.features(0) == doctest::Approx(150.0));
    CHECK(a.features(kNumMeasures) == doctest::Approx(50.0));
    CHECK(agg.instances[1].features(kNumMeasures) == 0.0);
    CHECK(aggregate_feature_names().size() == kAggregateWidth);
    CHECK(aggregate_feature_names()[0].rfind("mean_", 0) == 0);
  }

  TEST_CASE("instances without a fixated word are dropped with a warning") {
    Dataset d;
    d.subjects = {{"a", 1}, {"b", 0}};
    d.sentences = {{"s1", {3, 4}, {}}, {"s2", {3}, {}}};
    ReadingMeasureVector skipped;
    auto v = testutil::fixated();
    d.trials = {{"a", "s1", {skipped, skipped}}, {"a", "s2", {v}}, {"b", "s1", {v, v}}, {"b", "s2", {v}}};
    const auto sent = aggregate_features(d, Scope::Sentence);
    CHECK(sent.instances.size() == 3);
    CHECK(sent.warnings.size() == 1);
    const auto subj = aggregate_features(d, Scope::Subject);
    CHECK(subj.instances.size() == 2);
    CHECK(subj.warnings.empty());
  }

  TEST_CASE("subject aggregation pools every fixated word of the subject") {
    const auto d = generate_synthetic(testutil::small_spec(3));
    const auto agg = aggregate_features(d, Scope::Subject);
    REQUIRE(agg.instances.size() == d.subjects.size());
    const auto& inst = agg.instances[0];
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : d.trials) {
      if (t.subject_id != inst.subject_id) continue;
      for (const auto& w : t.measures)
        if (!w.is_skipped()) {
          sum += w.values[3];
          ++n;
        }
    }
    CHECK(inst.features(3) == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
  }

  TEST_CASE("model JSON names the active features") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    informative_set(30, 22, 4, x, y);
    const std::vector<std::size_t> cols{0, 13};
    const auto m = train_linear_svm(select_columns(x, cols), y, 1.0, cols);
    NormStats st{Eigen::VectorXd::Zero(24), Eigen::VectorXd::Ones(24)};
    const auto j = nlohmann::json::parse(model_to_json(m, st));
    CHECK(j.dump().find(aggregate_feature_names()[13]) != std::string::npos);
  }
}
