#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gazelens/nn.hpp"

namespace gazelens::nn {

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainResult {
  ModelParams params;  // parameters of the best early-stop epoch
  std::size_t best_epoch = 0;  // 1-based
  double best_earlystop_loss = 0.0;
  std::size_t epochs_run = 0;
  std::vector<double> train_loss;      // mean mini-batch loss per epoch
  std::vector<double> earlystop_loss;  // per epoch, after the epoch's updates
};

/// Adam state for one parameter set.
class Adam {
 public:
  Adam(const ModelParams& like, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);
  void step(ModelParams& params, const ModelParams& grad);

 private:
  ModelParams m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
};

/// Mean binary cross-entropy of a classifier over a labelled set (inference mode).
double mean_bce(const ModelParams& params, std::span<const Eigen::MatrixXd> sequences, std::span<const double> labels);

/// Mini-batch Adam on mean binary cross-entropy with per-epoch shuffling and
/// early stopping on the early-stop set. Throws gazelens::Error("nn", ...)
/// if the loss becomes non-finite.
TrainResult train_classifier(const ArchConfig& config, std::span<const Eigen::MatrixXd> train_x,
                             std::span<const double> train_y, std::span<const Eigen::MatrixXd> earlystop_x,
                             std::span<const double> earlystop_y, const TrainConfig& tc);

struct RegressionConfig {
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// Full-batch Adam on mean squared error for a feed-forward network.
/// `inputs` is input_width x n, `targets` output_width x n.
ModelParams train_regressor(const FfnConfig& config, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                            const RegressionConfig& rc, std::vector<double>* loss_trace = nullptr);

/// Full-batch FFN loss (mean over examples and outputs) with optional gradient (overwritten).
double ffn_batch_mse(const ModelParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                     ModelParams* grad);

}  // namespace gazelens::nn
