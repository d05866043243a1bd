#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gazelens/metrics.hpp"
#include "gazelens/nn.hpp"
#include "gazelens/svm.hpp"

using namespace gazelens;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (auto& v : m.reshaped()) v = nd(rng);
  return m;
}

std::vector<Eigen::MatrixXd> sentences(std::size_t n, Eigen::Index width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(8, 14);
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(gaussian(len(rng), width, rng));
  return out;
}

void BM_LstmBatchLossGrad(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto params = nn::init_params(nn::LstmConfig{12, hidden}, 1);
  const auto xs = sentences(32, 12, 2);
  std::vector<const Eigen::MatrixXd*> ptrs;
  std::vector<double> labels;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ptrs.push_back(&xs[i]);
    labels.push_back(static_cast<double>(i % 2));
  }
  for (auto _ : state) {
    auto grad = params.zeros_like();
    benchmark::DoNotOptimize(nn::lstm_batch_loss_grad(params, ptrs, labels, &grad));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_LstmBatchLossGrad)->Arg(10)->Arg(40)->Arg(80);

void BM_CnnForward(benchmark::State& state) {
  const auto params = nn::init_params(nn::CnnConfig{}, 3);
  const auto width = static_cast<Eigen::Index>(nn::input_width_of(params.config));
  const auto xs = sentences(64, width, 4);
  for (auto _ : state)
    for (const auto& x : xs) benchmark::DoNotOptimize(nn::cnn_forward(params, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_CnnForward);

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 2);
    scores[i] = nd(rng) + labels[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_auc(scores, labels).auc);
}
BENCHMARK(BM_RocAuc)->Arg(62)->Arg(3720);

void BM_LinearSvm(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = gaussian(state.range(0), 24, rng);
  std::vector<int> y(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[static_cast<std::size_t>(i)] = x(i, 0) + 0.5 * x(i, 3) > 0 ? 1 : 0;
  for (auto _ : state) benchmark::DoNotOptimize(svm::train_linear_svm(x, y, 1.0).bias);
}
BENCHMARK(BM_LinearSvm)->Arg(62)->Arg(2000);

void BM_RfeEliminate(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd x = gaussian(56, 24, rng);
  std::vector<int> y(56);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[static_cast<std::size_t>(i)] = x(i, 1) > 0 ? 1 : 0;
  for (auto _ : state) benchmark::DoNotOptimize(svm::rfe_eliminate(x, y, 1.0).size());
}
BENCHMARK(BM_RfeEliminate);

}  // namespace

BENCHMARK_MAIN();
