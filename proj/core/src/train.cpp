#include "gazelens/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "gazelens/error.hpp"
#include "gazelens/seed.hpp"

namespace gazelens::nn {

Adam::Adam(const ModelParams& like, double learning_rate, double beta1, double beta2, double epsilon)
    : m_(like.zeros_like()), v_(like.zeros_like()), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(ModelParams& params, const ModelParams& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto m = m_.tensors[i].value.array();
    auto v = v_.tensors[i].value.array();
    const auto g = grad.tensors[i].value.array();
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.square();
    params.tensors[i].value.array() -= lr_ * (m / c1) / ((v / c2).sqrt() + eps_);
  }
}

double mean_bce(const ModelParams& params, std::span<const Eigen::MatrixXd> sequences,
                std::span<const double> labels) {
  if (sequences.empty()) throw Error("nn", "mean_bce on an empty set");
  double total = 0.0;
  if (params.kind() == ModelKind::Lstm) {
    std::vector<const Eigen::MatrixXd*> chunk;
    for (std::size_t start = 0; start < sequences.size(); start += 64) {
      const std::size_t end = std::min(sequences.size(), start + 64);
      chunk.clear();
      for (std::size_t i = start; i < end; ++i) chunk.push_back(&sequences[i]);
      total += lstm_batch_loss_grad(params, chunk, labels.subspan(start, end - start), nullptr);
    }
    return total / static_cast<double>(sequences.size());
  }
  Eigen::VectorXd target(1);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    target(0) = labels[i];
    total += loss_and_gradient(params, sequences[i], target, nullptr, false, 0);
  }
  return total / static_cast<double>(sequences.size());
}

TrainResult train_classifier(const ArchConfig& config, std::span<const Eigen::MatrixXd> train_x,
                             std::span<const double> train_y, std::span<const Eigen::MatrixXd> earlystop_x,
                             std::span<const double> earlystop_y, const TrainConfig& tc) {
  if (kind_of(config) == ModelKind::Ffn) throw Error("nn", "train_classifier needs an LSTM or CNN config");
  if (train_x.empty() || earlystop_x.empty()) throw Error("nn", "training and early-stop sets must be non-empty");
  if (train_x.size() != train_y.size() || earlystop_x.size() != earlystop_y.size())
    throw Error("nn", "sequence/label count mismatch");
  for (double y : train_y)
    if (y != 0.0 && y != 1.0) throw Error("nn", "labels must be binary");
  if (tc.batch_size == 0 || tc.max_epochs == 0) throw Error("nn", "batch size and max_epochs must be positive");

  ModelParams params = init_params(config, derive_seed(tc.seed, "nn.init"));
  ModelParams grad = params.zeros_like();
  Adam opt(params, tc.learning_rate, tc.beta1, tc.beta2, tc.epsilon);
  std::mt19937_64 shuffle_rng(derive_seed(tc.seed, "nn.shuffle"));
  const std::uint64_t dropout_base = derive_seed(tc.seed, "nn.dropout");

  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::VectorXd target(1);
  const bool batched = params.kind() == ModelKind::Lstm;
  std::vector<const Eigen::MatrixXd*> batch_x;
  std::vector<double> batch_y;

  TrainResult res;
  res.params = params;
  res.best_earlystop_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      grad.set_zero();
      double batch_loss = 0.0;
      if (batched) {
        batch_x.clear();
        batch_y.clear();
        for (std::size_t b = start; b < end; ++b) {
          batch_x.push_back(&train_x[order[b]]);
          batch_y.push_back(train_y[order[b]]);
        }
        batch_loss = lstm_batch_loss_grad(params, batch_x, batch_y, &grad);
      }
      for (std::size_t b = start; b < end && !batched; ++b) {
        const std::size_t i = order[b];
        target(0) = train_y[i];
        batch_loss += loss_and_gradient(params, train_x[i], target, &grad, true,
                                        mix64(dropout_base ^ (epoch * 0x9E3779B97F4A7C15ULL) ^ b));
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& t : grad.tensors) t.value *= inv;
      batch_loss *= inv;
      if (!std::isfinite(batch_loss) || !grad.all_finite())
        throw Error("nn", "training diverged at epoch " + std::to_string(epoch) + " (batch loss " +
                              std::to_string(batch_loss) + ", learning rate " + std::to_string(tc.learning_rate) +
                              ")");
      opt.step(params, grad);
      epoch_loss += batch_loss;
      ++batches;
    }
    res.train_loss.push_back(epoch_loss / static_cast<double>(batches));
    const double es = mean_bce(params, earlystop_x, earlystop_y);
    if (!std::isfinite(es) || !params.all_finite())
      throw Error("nn", "training diverged at epoch " + std::to_string(epoch) + " (non-finite early-stop loss)");
    res.earlystop_loss.push_back(es);
    res.epochs_run = epoch;
    if (es < res.best_earlystop_loss) {
      res.best_earlystop_loss = es;
      res.best_epoch = epoch;
      res.params = params;
      since_best = 0;
    } else if (++since_best >= tc.patience) {
      break;
    }
  }
  return res;
}

double ffn_batch_mse(const ModelParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                     ModelParams* grad) {
  using namespace ffn_slot;
  const auto n = static_cast<double>(inputs.cols());
  Eigen::MatrixXd hidden = params[kW1] * inputs;
  hidden.colwise() += params[kB1].col(0);
  hidden = hidden.array().tanh().matrix();
  Eigen::MatrixXd out = params[kW2] * hidden;
  out.colwise() += params[kB2].col(0);
  const Eigen::MatrixXd diff = out - targets;
  const double denom = n * static_cast<double>(targets.rows());
  const double loss = diff.squaredNorm() / denom;
  if (grad) {
    ModelParams& g = *grad;
    const Eigen::MatrixXd dout = (2.0 / denom) * diff;
    g[kW2].noalias() = dout * hidden.transpose();
    g[kB2] = dout.rowwise().sum();
    const Eigen::MatrixXd da =
        ((params[kW2].transpose() * dout).array() * (1.0 - hidden.array().square())).matrix();
    g[kW1].noalias() = da * inputs.transpose();
    g[kB1] = da.rowwise().sum();
  }
  return loss;
}

ModelParams train_regressor(const FfnConfig& config, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                            const RegressionConfig& rc, std::vector<double>* loss_trace) {
  if (inputs.cols() == 0 || inputs.cols() != targets.cols()) throw Error("nn", "regression set is empty or ragged");
  if (static_cast<std::size_t>(inputs.rows()) != config.input_width ||
      static_cast<std::size_t>(targets.rows()) != config.output_width)
    throw Error("nn", "regression data shape does not match the FFN config");
  ModelParams params = init_params(config, derive_seed(rc.seed, "nn.ffn.init"));
  ModelParams grad = params.zeros_like();
  Adam opt(params, rc.learning_rate);
  for (std::size_t e = 0; e < rc.epochs; ++e) {
    const double loss = ffn_batch_mse(params, inputs, targets, &grad);
    if (!std::isfinite(loss)) throw Error("nn", "regression diverged at epoch " + std::to_string(e + 1));
    if (loss_trace) loss_trace->push_back(loss);
    opt.step(params, grad);
  }
  if (loss_trace) loss_trace->push_back(ffn_batch_mse(params, inputs, targets, nullptr));
  return params;
}

}  // namespace gazelens::nn
