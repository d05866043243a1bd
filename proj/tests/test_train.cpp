#include <doctest.h>

#include <cmath>
#include <random>

#include "gazelens/error.hpp"
#include "gazelens/nn.hpp"
#include "gazelens/train.hpp"

using namespace gazelens;
using namespace gazelens::nn;

namespace {

// Class 1 sequences drift upward in the first channel.
void separable(std::size_t n, std::uint64_t seed, std::vector<Eigen::MatrixXd>& x, std::vector<double>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.3);
  std::uniform_int_distribution<int> len(3, 6);
  for (std::size_t i = 0; i < n; ++i) {
    const double label = static_cast<double>(i % 2);
    Eigen::MatrixXd m(len(rng), 3);
    for (auto& v : m.reshaped()) v = nd(rng);
    m.col(0).array() += label > 0 ? 1.0 : -1.0;
    x.push_back(m);
    y.push_back(label);
  }
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("Adam first step moves each coordinate by the learning rate") {
    ModelParams p = init_params(FfnConfig{2, 2, 1}, 1);
    const ModelParams before = p;
    ModelParams g = p.zeros_like();
    for (auto& t : g.tensors) t.value.setConstant(0.37);
    g[0](0, 0) = -2.0;
    Adam opt(p, 0.01);
    opt.step(p, g);
    // bias-corrected m/sqrt(v) is sign(g) on the first step
    CHECK(p[0](0, 0) - before[0](0, 0) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(p[0](1, 1) - before[0](1, 1) == doctest::Approx(-0.01).epsilon(1e-6));
  }

  TEST_CASE("Adam second step matches a hand computation") {
    ModelParams p = init_params(FfnConfig{1, 1, 1}, 1);
    p.set_zero();
    ModelParams g = p.zeros_like();
    Adam opt(p, 0.1, 0.9, 0.999, 1e-8);
    g[0](0, 0) = 1.0;
    opt.step(p, g);
    g[0](0, 0) = 3.0;
    opt.step(p, g);
    const double m = 0.9 * 0.1 + 0.1 * 3.0, v = 0.999 * 0.001 + 0.001 * 9.0;
    const double first = -0.1 / (1.0 + 1e-8);
    const double expected = first - 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
    CHECK(p[0](0, 0) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("LSTM learns a separable problem") {
    std::vector<Eigen::MatrixXd> x, xe;
    std::vector<double> y, ye;
    separable(80, 1, x, y);
    separable(30, 2, xe, ye);
    TrainConfig tc;
    tc.batch_size = 16;
    tc.learning_rate = 0.02;
    tc.max_epochs = 40;
    tc.seed = 3;
    const auto r = train_classifier(LstmConfig{3, 6}, x, y, xe, ye, tc);
    CHECK(r.best_earlystop_loss < 0.2);
    CHECK(r.best_earlystop_loss == doctest::Approx(mean_bce(r.params, xe, ye)).epsilon(1e-12));
    CHECK(r.earlystop_loss.size() == r.epochs_run);
    CHECK(r.best_epoch >= 1);
  }

  TEST_CASE("CNN learns a separable problem") {
    std::vector<Eigen::MatrixXd> x, xe;
    std::vector<double> y, ye;
    separable(80, 4, x, y);
    separable(30, 5, xe, ye);
    TrainConfig tc;
    tc.batch_size = 8;
    tc.learning_rate = 0.01;
    tc.max_epochs = 40;
    tc.seed = 3;
    const auto r = train_classifier(CnnConfig{3, 4, 3, PoolKind::Max, 4, 3, PoolKind::Average, 6, 0.1}, x, y, xe, ye, tc);
    CHECK(r.best_earlystop_loss < 0.3);
  }

  TEST_CASE("early stopping keeps the best epoch and honours patience") {
    std::vector<Eigen::MatrixXd> x, xe;
    std::vector<double> y, ye;
    separable(40, 6, x, y);
    separable(20, 7, xe, ye);
    TrainConfig tc;
    tc.learning_rate = 0.05;
    tc.max_epochs = 200;
    tc.patience = 3;
    tc.seed = 9;
    const auto r = train_classifier(LstmConfig{3, 4}, x, y, xe, ye, tc);
    const auto best = std::min_element(r.earlystop_loss.begin(), r.earlystop_loss.end());
    CHECK(static_cast<std::size_t>(best - r.earlystop_loss.begin()) + 1 == r.best_epoch);
    if (r.epochs_run < tc.max_epochs) CHECK(r.epochs_run == r.best_epoch + tc.patience);
  }

  TEST_CASE("training is deterministic per seed") {
    std::vector<Eigen::MatrixXd> x, xe;
    std::vector<double> y, ye;
    separable(30, 8, x, y);
    separable(10, 9, xe, ye);
    TrainConfig tc;
    tc.max_epochs = 5;
    tc.seed = 12;
    const auto a = train_classifier(LstmConfig{3, 3}, x, y, xe, ye, tc);
    const auto b = train_classifier(LstmConfig{3, 3}, x, y, xe, ye, tc);
    CHECK(a.earlystop_loss == b.earlystop_loss);
    CHECK(serialize_binary(a.params) == serialize_binary(b.params));
  }

  TEST_CASE("divergence is reported as an error") {
    std::vector<Eigen::MatrixXd> x, xe;
    std::vector<double> y, ye;
    separable(10, 8, x, y);
    separable(4, 9, xe, ye);
    x[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    TrainConfig tc;
    tc.max_epochs = 2;
    CHECK_THROWS_AS(train_classifier(LstmConfig{3, 3}, x, y, xe, ye, tc), Error);
  }

  TEST_CASE("bad training inputs are rejected") {
    std::vector<Eigen::MatrixXd> x, xe;
    std::vector<double> y, ye;
    separable(10, 8, x, y);
    separable(4, 9, xe, ye);
    TrainConfig tc;
    CHECK_THROWS_AS(train_classifier(FfnConfig{}, x, y, xe, ye, tc), Error);
    CHECK_THROWS_AS(train_classifier(LstmConfig{3, 3}, x, y, {}, {}, tc), Error);
    y[0] = 0.5;
    CHECK_THROWS_AS(train_classifier(LstmConfig{3, 3}, x, y, xe, ye, tc), Error);
  }

  TEST_CASE("full-batch regression reduces the loss") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd in(6, 50), out(2, 50);
    for (auto& v : in.reshaped()) v = nd(rng);
    out.row(0) = in.row(0) - 0.5 * in.row(3);
    out.row(1) = in.row(2).array().tanh();
    std::vector<double> trace;
    RegressionConfig rc;
    rc.epochs = 300;
    rc.learning_rate = 1e-2;
    const auto p = train_regressor(FfnConfig{6, 8, 2}, in, out, rc, &trace);
    REQUIRE(trace.size() == 301);
    CHECK(trace.back() < 0.2 * trace.front());
    CHECK(trace.back() == doctest::Approx(ffn_batch_mse(p, in, out, nullptr)).epsilon(1e-12));
    CHECK_THROWS_AS(train_regressor(FfnConfig{5, 8, 2}, in, out, rc), Error);
  }

  TEST_CASE("batched FFN loss equals the per-example mean") {
    const auto p = init_params(FfnConfig{4, 3, 2}, 5);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd in(4, 6), out(2, 6);
    for (auto& v : in.reshaped()) v = nd(rng);
    for (auto& v : out.reshaped()) v = nd(rng);
    std::vector<Eigen::MatrixXd> xs;
    std::vector<Eigen::VectorXd> ys;
    for (int i = 0; i < 6; ++i) {
      xs.emplace_back(in.col(i));
      ys.emplace_back(out.col(i));
    }
    ModelParams g1 = p.zeros_like(), g2 = p.zeros_like();
    const double a = ffn_batch_mse(p, in, out, &g1);
    const double b = batch_loss_and_gradient(p, xs, ys, &g2);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    for (std::size_t i = 0; i < g1.tensors.size(); ++i) CHECK((g1[i] - g2[i]).cwiseAbs().maxCoeff() < 1e-12);
  }
}
