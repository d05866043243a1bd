#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gazelens::nn {

enum class ModelKind { Lstm, Cnn, Ffn };
enum class PoolKind { Average, Max };
enum class Padding { Same, Valid };

std::string_view to_string(ModelKind k) noexcept;
std::string_view to_string(PoolKind k) noexcept;

/// Bidirectional LSTM over the word axis; mean-pooled states feed a single
/// sigmoid unit.
struct LstmConfig {
  std::size_t input_width = 12;
  std::size_t hidden_size = 20;

  bool operator==(const LstmConfig&) const = default;
};

/// conv -> relu -> pool -> conv -> relu -> pool -> global mean -> dense+relu
/// -> dropout -> dense -> sigmoid. Convolutions are zero-padded to keep the
/// sequence length; pools use window 2, stride 2 and keep a trailing partial
/// window.
struct CnnConfig {
  std::size_t input_width = 12;
  std::size_t c1_channels = 10;
  std::size_t c1_kernel = 3;
  PoolKind c1_pool = PoolKind::Max;
  std::size_t c2_channels = 20;
  std::size_t c2_kernel = 3;
  PoolKind c2_pool = PoolKind::Max;
  std::size_t l1_size = 20;
  double dropout = 0.1;

  bool operator==(const CnnConfig&) const = default;
};

/// One tanh hidden layer, linear output.
struct FfnConfig {
  std::size_t input_width = 768;
  std::size_t hidden_size = 20;
  std::size_t output_width = 12;

  bool operator==(const FfnConfig&) const = default;
};

using ArchConfig = std::variant<LstmConfig, CnnConfig, FfnConfig>;

ModelKind kind_of(const ArchConfig& c) noexcept;
std::size_t input_width_of(const ArchConfig& c) noexcept;

struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
};

/// Trained weights of one network. Tensor order and shapes are fixed by the
/// configuration (see make_shapes in nn.cpp).
struct ModelParams {
  ArchConfig config;
  std::vector<Tensor> tensors;

  ModelKind kind() const noexcept { return kind_of(config); }
  Eigen::MatrixXd& operator[](std::size_t i) { return tensors[i].value; }
  const Eigen::MatrixXd& operator[](std::size_t i) const { return tensors[i].value; }

  std::size_t parameter_count() const noexcept;
  bool all_finite() const noexcept;
  void set_zero();
  /// Same config and shapes, all zeros.
  ModelParams zeros_like() const;

  /// Hash of config and raw tensor bytes; equal iff bit-identical (modulo collisions).
  std::uint64_t fingerprint() const noexcept;
};

/// Parameters with the right shapes: uniform Glorot weights, zero biases,
/// LSTM forget-gate bias 1.
ModelParams init_params(const ArchConfig& config, std::uint64_t seed);

// Named tensor slots.
namespace lstm_slot {
inline constexpr std::size_t kFwdWx = 0, kFwdWh = 1, kFwdB = 2, kBwdWx = 3, kBwdWh = 4, kBwdB = 5, kOutW = 6,
                             kOutB = 7;
}
namespace cnn_slot {
inline constexpr std::size_t kConv1W = 0, kConv1B = 1, kConv2W = 2, kConv2B = 3, kDense1W = 4, kDense1B = 5,
                             kDense2W = 6, kDense2B = 7;
}
namespace ffn_slot {
inline constexpr std::size_t kW1 = 0, kB1 = 1, kW2 = 2, kB2 = 3;
}

double sigmoid(double x) noexcept;

// ---- building blocks (exposed for testing) ----

/// Cross-correlation over rows of `input` (time x channels). `weights` is
/// out_channels x (kernel * in_channels) with tap-major columns.
Eigen::MatrixXd conv1d(const Eigen::MatrixXd& input, const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                       std::size_t kernel, Padding padding);

/// Window 2, stride 2 pooling over rows; an odd trailing row forms its own window.
Eigen::MatrixXd pool1d(const Eigen::MatrixXd& input, PoolKind kind);

// ---- forward passes ----

/// Mean over time of the concatenated [forward; backward] hidden states.
Eigen::VectorXd lstm_pooled(const ModelParams& params, const Eigen::MatrixXd& sequence);
double lstm_forward(const ModelParams& params, const Eigen::MatrixXd& sequence);

double cnn_forward(const ModelParams& params, const Eigen::MatrixXd& sequence, bool training = false,
                   std::uint64_t dropout_seed = 0);

struct FfnOutput {
  Eigen::VectorXd hidden;
  Eigen::VectorXd output;
};
FfnOutput ffn_forward(const ModelParams& params, const Eigen::VectorXd& input);

/// Inference-mode probability for an LSTM or CNN.
double predict(const ModelParams& params, const Eigen::MatrixXd& sequence);
std::vector<double> predict(const ModelParams& params, std::span<const Eigen::MatrixXd> sequences);

// ---- losses and gradients ----

/// Loss of one example, gradient accumulated (added) into `grad` when non-null.
/// Classifiers: `input` is time x width, `target(0)` the label, loss is binary
/// cross-entropy. FFN: `input` is a column vector, loss is the mean squared
/// error over output components.
double loss_and_gradient(const ModelParams& params, const Eigen::MatrixXd& input, const Eigen::VectorXd& target,
                         ModelParams* grad, bool training = false, std::uint64_t dropout_seed = 0);

/// Summed binary cross-entropy of an LSTM over a mini-batch processed as one
/// padded batch; gradient accumulated into `grad` when non-null. Equal, up to
/// rounding, to summing loss_and_gradient over the examples.
double lstm_batch_loss_grad(const ModelParams& params, std::span<const Eigen::MatrixXd* const> sequences,
                            std::span<const double> labels, ModelParams* grad);
std::vector<double> lstm_batch_predict(const ModelParams& params, std::span<const Eigen::MatrixXd* const> sequences);

/// Mean loss over examples (dropout seed i + `dropout_seed` for example i when training).
double batch_loss_and_gradient(const ModelParams& params, std::span<const Eigen::MatrixXd> inputs,
                               std::span<const Eigen::VectorXd> targets, ModelParams* grad, bool training = false,
                               std::uint64_t dropout_seed = 0);

/// Max relative error between analytic gradients and central differences
/// over every parameter coordinate. Dropout masks are held fixed.
struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;
  Eigen::Index worst_index = 0;
  std::size_t coordinates = 0;
};
GradientCheckResult gradient_check(const ModelParams& params, std::span<const Eigen::MatrixXd> inputs,
                                   std::span<const Eigen::VectorXd> targets, bool training = false,
                                   std::uint64_t dropout_seed = 0, double step = 1e-5);

// ---- serialization ----

std::string serialize_binary(const ModelParams& params);
ModelParams deserialize_binary(std::string_view bytes);
std::string to_json(const ModelParams& params);
ModelParams from_json(std::string_view json);
void save_params(const ModelParams& params, const std::filesystem::path& path);  // writes path and path.json
ModelParams load_params(const std::filesystem::path& path);

}  // namespace gazelens::nn
