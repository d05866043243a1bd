#include "gazelens/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gazelens/error.hpp"
#include "gazelens/seed.hpp"

namespace gazelens::nn {
namespace {

using Eigen::ArrayXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

[[noreturn]] void fail(const std::string& msg) { throw Error("nn", msg); }

Index idx(std::size_t n) { return static_cast<Index>(n); }

struct Shape {
  const char* name;
  Index rows, cols;
};

std::vector<Shape> make_shapes(const ArchConfig& config) {
  return std::visit(
      [](const auto& c) -> std::vector<Shape> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LstmConfig>) {
          const Index h = idx(c.hidden_size), d = idx(c.input_width);
          return {{"fwd_wx", 4 * h, d}, {"fwd_wh", 4 * h, h}, {"fwd_b", 4 * h, 1}, {"bwd_wx", 4 * h, d},
                  {"bwd_wh", 4 * h, h}, {"bwd_b", 4 * h, 1},   {"out_w", 1, 2 * h}, {"out_b", 1, 1}};
        } else if constexpr (std::is_same_v<T, CnnConfig>) {
          const Index d = idx(c.input_width), c1 = idx(c.c1_channels), c2 = idx(c.c2_channels), l1 = idx(c.l1_size);
          return {{"conv1_w", c1, idx(c.c1_kernel) * d},  {"conv1_b", c1, 1}, {"conv2_w", c2, idx(c.c2_kernel) * c1},
                  {"conv2_b", c2, 1},  {"dense1_w", l1, c2}, {"dense1_b", l1, 1}, {"dense2_w", 1, l1},
                  {"dense2_b", 1, 1}};
        } else {
          const Index d = idx(c.input_width), h = idx(c.hidden_size), o = idx(c.output_width);
          return {{"w1", h, d}, {"b1", h, 1}, {"w2", o, h}, {"b2", o, 1}};
        }
      },
      config);
}

void validate_config(const ArchConfig& config) {
  std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if (c.input_width == 0) fail("input width must be positive");
        if constexpr (std::is_same_v<T, LstmConfig>) {
          if (c.hidden_size == 0) fail("LSTM hidden size must be positive");
        } else if constexpr (std::is_same_v<T, CnnConfig>) {
          if (c.c1_channels == 0 || c.c2_channels == 0 || c.l1_size == 0) fail("CNN layer sizes must be positive");
          if (c.c1_kernel == 0 || c.c2_kernel == 0) fail("CNN kernels must be positive");
          if (!(c.dropout >= 0.0 && c.dropout < 1.0)) fail("CNN dropout must be in [0, 1)");
        } else {
          if (c.hidden_size == 0 || c.output_width == 0) fail("FFN sizes must be positive");
        }
      },
      config);
}

void check_sequence(const ModelParams& p, const MatrixXd& seq) {
  if (seq.rows() == 0) fail("empty sequence");
  const auto w = input_width_of(p.config);
  if (static_cast<std::size_t>(seq.cols()) != w)
    fail("input width " + std::to_string(seq.cols()) + " != model input width " + std::to_string(w));
}

ArrayXd sigmoid_array(const ArrayXd& x) { return 1.0 / (1.0 + (-x).exp()); }

// Numerically stable log(1 + exp(x)).
double softplus(double x) noexcept { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double bce_from_logit(double logit, double y) noexcept { return softplus(logit) - y * logit; }

// ---------------------------------------------------------------- LSTM --

struct DirectionPass {
  MatrixXd x;      // D x T, processing order
  MatrixXd gates;  // 4h x T, post-activation (i, f, g, o)
  MatrixXd c;      // h x T
  MatrixXd h;      // h x T
};

DirectionPass run_direction(const MatrixXd& wx, const MatrixXd& wh, const MatrixXd& b, const MatrixXd& seq,
                            bool reverse) {
  const Index t_len = seq.rows();
  const Index hs = wh.cols();
  DirectionPass pass;
  pass.x = reverse ? MatrixXd(seq.colwise().reverse().transpose()) : MatrixXd(seq.transpose());
  pass.gates.noalias() = wx * pass.x;
  pass.gates.colwise() += b.col(0);
  pass.c.resize(hs, t_len);
  pass.h.resize(hs, t_len);
  VectorXd h_prev = VectorXd::Zero(hs);
  VectorXd c_prev = VectorXd::Zero(hs);
  VectorXd a(4 * hs);
  for (Index s = 0; s < t_len; ++s) {
    a = pass.gates.col(s);
    a.noalias() += wh * h_prev;
    auto g = pass.gates.col(s);
    g.segment(0, 2 * hs) = sigmoid_array(a.segment(0, 2 * hs).array()).matrix();
    g.segment(2 * hs, hs) = a.segment(2 * hs, hs).array().tanh().matrix();
    g.segment(3 * hs, hs) = sigmoid_array(a.segment(3 * hs, hs).array()).matrix();
    c_prev = g.segment(hs, hs).cwiseProduct(c_prev) + g.segment(0, hs).cwiseProduct(g.segment(2 * hs, hs));
    h_prev = g.segment(3 * hs, hs).array().cwiseProduct(c_prev.array().tanh()).matrix();
    pass.c.col(s) = c_prev;
    pass.h.col(s) = h_prev;
  }
  return pass;
}

// Backpropagates a constant per-step hidden-state gradient `dh_step` through one direction.
void backprop_direction(const DirectionPass& pass, const MatrixXd& wh, const VectorXd& dh_step, MatrixXd& dwx,
                        MatrixXd& dwh, MatrixXd& db) {
  const Index t_len = pass.h.cols();
  const Index hs = pass.h.rows();
  MatrixXd da(4 * hs, t_len);
  VectorXd dh_next = VectorXd::Zero(hs);
  ArrayXd dc_next = ArrayXd::Zero(hs);
  for (Index s = t_len - 1; s >= 0; --s) {
    const ArrayXd dh = (dh_step + dh_next).array();
    const auto gcol = pass.gates.col(s).array();
    const ArrayXd i = gcol.segment(0, hs), f = gcol.segment(hs, hs), g = gcol.segment(2 * hs, hs),
                  o = gcol.segment(3 * hs, hs);
    const ArrayXd tanh_c = pass.c.col(s).array().tanh();
    const ArrayXd c_prev = s > 0 ? ArrayXd(pass.c.col(s - 1).array()) : ArrayXd::Zero(hs);
    const ArrayXd dc = dh * o * (1.0 - tanh_c.square()) + dc_next;
    auto out = da.col(s).array();
    out.segment(0, hs) = dc * g * i * (1.0 - i);
    out.segment(hs, hs) = dc * c_prev * f * (1.0 - f);
    out.segment(2 * hs, hs) = dc * i * (1.0 - g.square());
    out.segment(3 * hs, hs) = dh * tanh_c * o * (1.0 - o);
    dc_next = dc * f;
    dh_next.noalias() = wh.transpose() * da.col(s);
  }
  MatrixXd h_prev = MatrixXd::Zero(hs, t_len);
  if (t_len > 1) h_prev.rightCols(t_len - 1) = pass.h.leftCols(t_len - 1);
  dwx.noalias() += da * pass.x.transpose();
  dwh.noalias() += da * h_prev.transpose();
  db.col(0) += da.rowwise().sum();
}

struct LstmPass {
  DirectionPass fwd, bwd;
  VectorXd pooled;
  double logit = 0.0;
};

LstmPass lstm_run(const ModelParams& p, const MatrixXd& seq) {
  using namespace lstm_slot;
  LstmPass r;
  r.fwd = run_direction(p[kFwdWx], p[kFwdWh], p[kFwdB], seq, false);
  r.bwd = run_direction(p[kBwdWx], p[kBwdWh], p[kBwdB], seq, true);
  const Index hs = r.fwd.h.rows();
  r.pooled.resize(2 * hs);
  r.pooled.head(hs) = r.fwd.h.rowwise().mean();
  r.pooled.tail(hs) = r.bwd.h.rowwise().mean();
  r.logit = (p[kOutW] * r.pooled)(0) + p[kOutB](0, 0);
  return r;
}

double lstm_loss_grad(const ModelParams& p, const MatrixXd& seq, double y, ModelParams* grad) {
  using namespace lstm_slot;
  const LstmPass r = lstm_run(p, seq);
  const double loss = bce_from_logit(r.logit, y);
  if (!grad) return loss;
  ModelParams& g = *grad;
  const double dz = sigmoid(r.logit) - y;
  g[kOutW].noalias() += dz * r.pooled.transpose();
  g[kOutB](0, 0) += dz;
  const Index hs = r.fwd.h.rows();
  const double inv_t = 1.0 / static_cast<double>(seq.rows());
  const VectorXd dpool = dz * inv_t * p[kOutW].row(0).transpose();
  backprop_direction(r.fwd, p[kFwdWh], dpool.head(hs), g[kFwdWx], g[kFwdWh], g[kFwdB]);
  backprop_direction(r.bwd, p[kBwdWh], dpool.tail(hs), g[kBwdWx], g[kBwdWh], g[kBwdB]);
  return loss;
}

// Mini-batch LSTM: sequences are padded at the end of each direction's
// processing order, so padded steps never feed a valid one.

using ArrayXXd = Eigen::ArrayXXd;

struct BatchDirection {
  std::vector<MatrixXd> x, gates, c, h;  // per step: D x B, 4h x B, h x B, h x B
};

MatrixXd sigmoid_block(const MatrixXd& a) { return (1.0 / (1.0 + (-a.array()).exp())).matrix(); }

BatchDirection run_batch_direction(const MatrixXd& wx, const MatrixXd& wh, const MatrixXd& b,
                                   std::span<const MatrixXd* const> seqs, Index t_max, bool reverse) {
  const Index hs = wh.cols(), d = wx.cols();
  const Index nb = static_cast<Index>(seqs.size());
  BatchDirection p;
  p.x.assign(static_cast<std::size_t>(t_max), MatrixXd::Zero(d, nb));
  for (Index j = 0; j < nb; ++j) {
    const MatrixXd& sq = *seqs[static_cast<std::size_t>(j)];
    const Index len = sq.rows();
    for (Index s = 0; s < len; ++s) p.x[static_cast<std::size_t>(s)].col(j) = sq.row(reverse ? len - 1 - s : s).transpose();
  }
  MatrixXd h_prev = MatrixXd::Zero(hs, nb), c_prev = MatrixXd::Zero(hs, nb);
  for (Index s = 0; s < t_max; ++s) {
    MatrixXd a = wx * p.x[static_cast<std::size_t>(s)];
    a.noalias() += wh * h_prev;
    a.colwise() += b.col(0);
    MatrixXd g(4 * hs, nb);
    g.topRows(2 * hs) = sigmoid_block(a.topRows(2 * hs));
    g.middleRows(2 * hs, hs) = a.middleRows(2 * hs, hs).array().tanh().matrix();
    g.bottomRows(hs) = sigmoid_block(a.bottomRows(hs));
    c_prev = (g.middleRows(hs, hs).array() * c_prev.array() + g.topRows(hs).array() * g.middleRows(2 * hs, hs).array())
                 .matrix();
    h_prev = (g.bottomRows(hs).array() * c_prev.array().tanh()).matrix();
    p.gates.push_back(std::move(g));
    p.c.push_back(c_prev);
    p.h.push_back(h_prev);
  }
  return p;
}

// dh_step: per-example pooled gradient (h x B), applied at valid steps only.
void backprop_batch_direction(const BatchDirection& p, const MatrixXd& wh, const MatrixXd& dh_step,
                              const std::vector<Index>& lens, MatrixXd& dwx, MatrixXd& dwh, MatrixXd& db) {
  const Index t_max = static_cast<Index>(p.h.size());
  const Index hs = wh.cols(), nb = dh_step.cols();
  MatrixXd dh_next = MatrixXd::Zero(hs, nb);
  ArrayXXd dc_next = ArrayXXd::Zero(hs, nb);
  MatrixXd da(4 * hs, nb);
  for (Index s = t_max - 1; s >= 0; --s) {
    const auto us = static_cast<std::size_t>(s);
    ArrayXXd dh = dh_next.array();
    for (Index j = 0; j < nb; ++j)
      if (s < lens[static_cast<std::size_t>(j)]) dh.col(j) += dh_step.col(j).array();
    const auto& g = p.gates[us];
    const ArrayXXd i = g.topRows(hs).array(), f = g.middleRows(hs, hs).array(),
                   gg = g.middleRows(2 * hs, hs).array(), o = g.bottomRows(hs).array();
    const ArrayXXd tanh_c = p.c[us].array().tanh();
    const ArrayXXd c_prev = s > 0 ? ArrayXXd(p.c[us - 1].array()) : ArrayXXd::Zero(hs, nb);
    const ArrayXXd dc = dh * o * (1.0 - tanh_c.square()) + dc_next;
    da.topRows(hs) = (dc * gg * i * (1.0 - i)).matrix();
    da.middleRows(hs, hs) = (dc * c_prev * f * (1.0 - f)).matrix();
    da.middleRows(2 * hs, hs) = (dc * i * (1.0 - gg.square())).matrix();
    da.bottomRows(hs) = (dh * tanh_c * o * (1.0 - o)).matrix();
    dc_next = dc * f;
    dh_next.noalias() = wh.transpose() * da;
    dwx.noalias() += da * p.x[us].transpose();
    if (s > 0) dwh.noalias() += da * p.h[us - 1].transpose();
    db.col(0) += da.rowwise().sum();
  }
}

struct BatchLstm {
  BatchDirection fwd, bwd;
  MatrixXd pooled;  // 2h x B
  VectorXd logits;
  std::vector<Index> lens;
};

BatchLstm run_batch_lstm(const ModelParams& p, std::span<const MatrixXd* const> seqs) {
  using namespace lstm_slot;
  BatchLstm r;
  const Index nb = static_cast<Index>(seqs.size());
  Index t_max = 0;
  for (const MatrixXd* sq : seqs) {
    if (sq->rows() == 0) fail("empty sequence");
    if (sq->cols() != p[kFwdWx].cols()) fail("sequence width does not match the LSTM input width");
    r.lens.push_back(sq->rows());
    t_max = std::max(t_max, sq->rows());
  }
  r.fwd = run_batch_direction(p[kFwdWx], p[kFwdWh], p[kFwdB], seqs, t_max, false);
  r.bwd = run_batch_direction(p[kBwdWx], p[kBwdWh], p[kBwdB], seqs, t_max, true);
  const Index hs = p[kFwdWh].cols();
  r.pooled = MatrixXd::Zero(2 * hs, nb);
  for (Index j = 0; j < nb; ++j) {
    const Index len = r.lens[static_cast<std::size_t>(j)];
    for (Index s = 0; s < len; ++s) {
      r.pooled.col(j).head(hs) += r.fwd.h[static_cast<std::size_t>(s)].col(j);
      r.pooled.col(j).tail(hs) += r.bwd.h[static_cast<std::size_t>(s)].col(j);
    }
    r.pooled.col(j) /= static_cast<double>(len);
  }
  r.logits = (p[kOutW] * r.pooled).transpose();
  r.logits.array() += p[kOutB](0, 0);
  return r;
}

// ----------------------------------------------------------------- CNN --

MatrixXd im2col(const MatrixXd& input, std::size_t kernel, Padding padding, Index& out_len) {
  const Index t_len = input.rows(), ch = input.cols(), k = idx(kernel);
  const Index pad = padding == Padding::Same ? (k - 1) / 2 : 0;
  out_len = padding == Padding::Same ? t_len : t_len - k + 1;
  if (out_len <= 0) fail("sequence shorter than convolution kernel");
  MatrixXd cols = MatrixXd::Zero(out_len, k * ch);
  for (Index t = 0; t < out_len; ++t)
    for (Index j = 0; j < k; ++j) {
      const Index src = t + j - pad;
      if (src >= 0 && src < t_len) cols.block(t, j * ch, 1, ch) = input.row(src);
    }
  return cols;
}

void col2im_add(const MatrixXd& dcols, std::size_t kernel, Index t_len, MatrixXd& dinput) {
  const Index ch = dinput.cols(), k = idx(kernel);
  const Index pad = (k - 1) / 2;
  for (Index t = 0; t < dcols.rows(); ++t)
    for (Index j = 0; j < k; ++j) {
      const Index src = t + j - pad;
      if (src >= 0 && src < t_len) dinput.row(src) += dcols.block(t, j * ch, 1, ch);
    }
}

struct PoolPass {
  MatrixXd out;
  Eigen::MatrixXi arg;  // max pooling source rows
};

PoolPass pool_run(const MatrixXd& in, PoolKind kind) {
  const Index t_len = in.rows(), ch = in.cols();
  const Index out_len = (t_len + 1) / 2;
  PoolPass r;
  r.out.resize(out_len, ch);
  if (kind == PoolKind::Max) r.arg.resize(out_len, ch);
  for (Index t = 0; t < out_len; ++t) {
    const Index a = 2 * t, b = std::min(2 * t + 1, t_len - 1);
    for (Index c = 0; c < ch; ++c) {
      if (kind == PoolKind::Max) {
        const bool second = in(b, c) > in(a, c);
        r.out(t, c) = second ? in(b, c) : in(a, c);
        r.arg(t, c) = static_cast<int>(second ? b : a);
      } else {
        r.out(t, c) = a == b ? in(a, c) : 0.5 * (in(a, c) + in(b, c));
      }
    }
  }
  return r;
}

MatrixXd pool_backward(const PoolPass& pass, const MatrixXd& dout, PoolKind kind, Index t_len) {
  MatrixXd din = MatrixXd::Zero(t_len, dout.cols());
  for (Index t = 0; t < dout.rows(); ++t) {
    const Index a = 2 * t, b = std::min(2 * t + 1, t_len - 1);
    for (Index c = 0; c < dout.cols(); ++c) {
      if (kind == PoolKind::Max) {
        din(pass.arg(t, c), c) += dout(t, c);
      } else if (a == b) {
        din(a, c) += dout(t, c);
      } else {
        din(a, c) += 0.5 * dout(t, c);
        din(b, c) += 0.5 * dout(t, c);
      }
    }
  }
  return din;
}

struct CnnPass {
  MatrixXd cols1, pre1;
  PoolPass pool1;
  MatrixXd cols2, pre2;
  PoolPass pool2;
  VectorXd pooled;  // global mean, c2
  VectorXd pre_d1;  // l1
  VectorXd mask;    // l1, inverted-dropout scale or 0
  VectorXd act_d1;  // relu(pre_d1) * mask
  double logit = 0.0;
};

CnnPass cnn_run(const ModelParams& p, const MatrixXd& seq, bool training, std::uint64_t dropout_seed) {
  using namespace cnn_slot;
  const auto& cfg = std::get<CnnConfig>(p.config);
  CnnPass r;
  Index len1 = 0, len2 = 0;
  r.cols1 = im2col(seq, cfg.c1_kernel, Padding::Same, len1);
  r.pre1.noalias() = r.cols1 * p[kConv1W].transpose();
  r.pre1.rowwise() += p[kConv1B].col(0).transpose();
  r.pool1 = pool_run(r.pre1.cwiseMax(0.0), cfg.c1_pool);
  r.cols2 = im2col(r.pool1.out, cfg.c2_kernel, Padding::Same, len2);
  r.pre2.noalias() = r.cols2 * p[kConv2W].transpose();
  r.pre2.rowwise() += p[kConv2B].col(0).transpose();
  r.pool2 = pool_run(r.pre2.cwiseMax(0.0), cfg.c2_pool);
  r.pooled = r.pool2.out.colwise().mean().transpose();
  r.pre_d1 = p[kDense1W] * r.pooled + p[kDense1B].col(0);
  r.mask = VectorXd::Ones(r.pre_d1.size());
  if (training && cfg.dropout > 0.0) {
    std::mt19937_64 rng(dropout_seed);
    std::bernoulli_distribution keep(1.0 - cfg.dropout);
    const double scale = 1.0 / (1.0 - cfg.dropout);
    for (Index i = 0; i < r.mask.size(); ++i) r.mask(i) = keep(rng) ? scale : 0.0;
  }
  r.act_d1 = r.pre_d1.cwiseMax(0.0).cwiseProduct(r.mask);
  r.logit = (p[kDense2W] * r.act_d1)(0) + p[kDense2B](0, 0);
  return r;
}

double cnn_loss_grad(const ModelParams& p, const MatrixXd& seq, double y, ModelParams* grad, bool training,
                     std::uint64_t dropout_seed) {
  using namespace cnn_slot;
  const auto& cfg = std::get<CnnConfig>(p.config);
  const CnnPass r = cnn_run(p, seq, training, dropout_seed);
  const double loss = bce_from_logit(r.logit, y);
  if (!grad) return loss;
  ModelParams& g = *grad;
  const double dz = sigmoid(r.logit) - y;
  g[kDense2W].noalias() += dz * r.act_d1.transpose();
  g[kDense2B](0, 0) += dz;
  VectorXd dpre_d1 = (dz * p[kDense2W].row(0).transpose()).cwiseProduct(r.mask);
  for (Index i = 0; i < dpre_d1.size(); ++i)
    if (r.pre_d1(i) <= 0.0) dpre_d1(i) = 0.0;
  g[kDense1W].noalias() += dpre_d1 * r.pooled.transpose();
  g[kDense1B].col(0) += dpre_d1;
  const VectorXd dpooled = p[kDense1W].transpose() * dpre_d1;

  const Index len3 = r.pool2.out.rows();
  MatrixXd dpool2 = (dpooled / static_cast<double>(len3)).transpose().replicate(len3, 1);
  MatrixXd dpre2 = pool_backward(r.pool2, dpool2, cfg.c2_pool, r.pre2.rows());
  dpre2 = (r.pre2.array() > 0.0).select(dpre2, 0.0);
  g[kConv2W].noalias() += dpre2.transpose() * r.cols2;
  g[kConv2B].col(0) += dpre2.colwise().sum().transpose();
  const MatrixXd dcols2 = dpre2 * p[kConv2W];
  MatrixXd dpool1 = MatrixXd::Zero(r.pool1.out.rows(), r.pool1.out.cols());
  col2im_add(dcols2, cfg.c2_kernel, r.pool1.out.rows(), dpool1);
  MatrixXd dpre1 = pool_backward(r.pool1, dpool1, cfg.c1_pool, r.pre1.rows());
  dpre1 = (r.pre1.array() > 0.0).select(dpre1, 0.0);
  g[kConv1W].noalias() += dpre1.transpose() * r.cols1;
  g[kConv1B].col(0) += dpre1.colwise().sum().transpose();
  return loss;
}

// ----------------------------------------------------------------- FFN --

double ffn_loss_grad(const ModelParams& p, const MatrixXd& input, const VectorXd& target, ModelParams* grad) {
  using namespace ffn_slot;
  if (input.cols() != 1) fail("FFN input must be a column vector");
  const FfnOutput out = ffn_forward(p, input.col(0));
  if (target.size() != out.output.size()) fail("FFN target width mismatch");
  const VectorXd diff = out.output - target;
  const double n_out = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n_out;
  if (!grad) return loss;
  ModelParams& g = *grad;
  const VectorXd dout = 2.0 / n_out * diff;
  g[kW2].noalias() += dout * out.hidden.transpose();
  g[kB2].col(0) += dout;
  const VectorXd da = (p[kW2].transpose() * dout).cwiseProduct((1.0 - out.hidden.array().square()).matrix());
  g[kW1].noalias() += da * input.col(0).transpose();
  g[kB1].col(0) += da;
  return loss;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::string_view to_string(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Cnn: return "cnn";
    case ModelKind::Ffn: return "ffn";
  }
  return "?";
}

std::string_view to_string(PoolKind k) noexcept { return k == PoolKind::Max ? "max" : "average"; }

ModelKind kind_of(const ArchConfig& c) noexcept {
  if (std::holds_alternative<LstmConfig>(c)) return ModelKind::Lstm;
  if (std::holds_alternative<CnnConfig>(c)) return ModelKind::Cnn;
  return ModelKind::Ffn;
}

std::size_t input_width_of(const ArchConfig& c) noexcept {
  return std::visit([](const auto& x) { return x.input_width; }, c);
}

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t ModelParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.value.size());
  return n;
}

bool ModelParams::all_finite() const noexcept {
  return std::all_of(tensors.begin(), tensors.end(), [](const Tensor& t) { return t.value.allFinite(); });
}

void ModelParams::set_zero() {
  for (auto& t : tensors) t.value.setZero();
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.set_zero();
  return z;
}

std::uint64_t ModelParams::fingerprint() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto k = static_cast<int>(kind());
  hash_bytes(h, &k, sizeof k);
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        hash_bytes(h, &c.input_width, sizeof c.input_width);
        if constexpr (std::is_same_v<T, LstmConfig>) {
          hash_bytes(h, &c.hidden_size, sizeof c.hidden_size);
        } else if constexpr (std::is_same_v<T, CnnConfig>) {
          const std::size_t v[] = {c.c1_channels, c.c1_kernel, static_cast<std::size_t>(c.c1_pool),
                                   c.c2_channels, c.c2_kernel, static_cast<std::size_t>(c.c2_pool), c.l1_size};
          hash_bytes(h, v, sizeof v);
          hash_bytes(h, &c.dropout, sizeof c.dropout);
        } else {
          const std::size_t v[] = {c.hidden_size, c.output_width};
          hash_bytes(h, v, sizeof v);
        }
      },
      config);
  for (const auto& t : tensors) {
    hash_bytes(h, t.name.data(), t.name.size());
    hash_bytes(h, t.value.data(), static_cast<std::size_t>(t.value.size()) * sizeof(double));
  }
  return h;
}

ModelParams init_params(const ArchConfig& config, std::uint64_t seed) {
  validate_config(config);
  ModelParams p{config, {}};
  std::mt19937_64 rng(seed);
  const bool lstm = std::holds_alternative<LstmConfig>(config);
  for (const Shape& s : make_shapes(config)) {
    Tensor t{s.name, MatrixXd::Zero(s.rows, s.cols)};
    const std::string_view name(s.name);
    const bool bias = name.ends_with("_b") || name.starts_with("b");
    if (!bias) {
      // Gate matrices are four stacked blocks; each block's fan-out is rows/4.
      const double fan_out = lstm && s.rows % 4 == 0 && std::string_view(s.name) != "out_w"
                                 ? static_cast<double>(s.rows) / 4.0
                                 : static_cast<double>(s.rows);
      const double limit = std::sqrt(6.0 / (static_cast<double>(s.cols) + fan_out));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Index j = 0; j < s.cols; ++j)
        for (Index i = 0; i < s.rows; ++i) t.value(i, j) = u(rng);
    }
    p.tensors.push_back(std::move(t));
  }
  if (lstm) {
    const Index h = idx(std::get<LstmConfig>(config).hidden_size);
    p[lstm_slot::kFwdB].block(h, 0, h, 1).setOnes();
    p[lstm_slot::kBwdB].block(h, 0, h, 1).setOnes();
  }
  return p;
}

MatrixXd conv1d(const MatrixXd& input, const MatrixXd& weights, const VectorXd& bias, std::size_t kernel,
                Padding padding) {
  if (weights.cols() != idx(kernel) * input.cols()) fail("conv1d weight shape does not match kernel * channels");
  if (bias.size() != weights.rows()) fail("conv1d bias size mismatch");
  Index out_len = 0;
  const MatrixXd cols = im2col(input, kernel, padding, out_len);
  MatrixXd out = cols * weights.transpose();
  out.rowwise() += bias.transpose();
  return out;
}

MatrixXd pool1d(const MatrixXd& input, PoolKind kind) {
  if (input.rows() == 0) fail("pool1d on empty input");
  return pool_run(input, kind).out;
}

VectorXd lstm_pooled(const ModelParams& params, const MatrixXd& sequence) {
  if (params.kind() != ModelKind::Lstm) fail("lstm_pooled called on a non-LSTM model");
  check_sequence(params, sequence);
  return lstm_run(params, sequence).pooled;
}

double lstm_forward(const ModelParams& params, const MatrixXd& sequence) {
  if (params.kind() != ModelKind::Lstm) fail("lstm_forward called on a non-LSTM model");
  check_sequence(params, sequence);
  return sigmoid(lstm_run(params, sequence).logit);
}

double cnn_forward(const ModelParams& params, const MatrixXd& sequence, bool training, std::uint64_t dropout_seed) {
  if (params.kind() != ModelKind::Cnn) fail("cnn_forward called on a non-CNN model");
  check_sequence(params, sequence);
  return sigmoid(cnn_run(params, sequence, training, dropout_seed).logit);
}

FfnOutput ffn_forward(const ModelParams& params, const VectorXd& input) {
  using namespace ffn_slot;
  if (params.kind() != ModelKind::Ffn) fail("ffn_forward called on a non-FFN model");
  if (input.size() != params[kW1].cols())
    fail("FFN input width " + std::to_string(input.size()) + " != " + std::to_string(params[kW1].cols()));
  FfnOutput out;
  out.hidden = (params[kW1] * input + params[kB1].col(0)).array().tanh().matrix();
  out.output = params[kW2] * out.hidden + params[kB2].col(0);
  return out;
}

double predict(const ModelParams& params, const MatrixXd& sequence) {
  switch (params.kind()) {
    case ModelKind::Lstm: return lstm_forward(params, sequence);
    case ModelKind::Cnn: return cnn_forward(params, sequence, false, 0);
    case ModelKind::Ffn: break;
  }
  fail("predict requires a classifier (LSTM or CNN)");
}

std::vector<double> predict(const ModelParams& params, std::span<const MatrixXd> sequences) {
  std::vector<double> out;
  out.reserve(sequences.size());
  if (params.kind() == ModelKind::Lstm) {
    std::vector<const MatrixXd*> chunk;
    for (std::size_t start = 0; start < sequences.size(); start += 64) {
      chunk.clear();
      for (std::size_t i = start; i < std::min(sequences.size(), start + 64); ++i) chunk.push_back(&sequences[i]);
      const auto part = lstm_batch_predict(params, chunk);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  for (const auto& s : sequences) out.push_back(predict(params, s));
  return out;
}

double loss_and_gradient(const ModelParams& params, const MatrixXd& input, const VectorXd& target, ModelParams* grad,
                         bool training, std::uint64_t dropout_seed) {
  switch (params.kind()) {
    case ModelKind::Lstm:
      check_sequence(params, input);
      return lstm_loss_grad(params, input, target(0), grad);
    case ModelKind::Cnn:
      check_sequence(params, input);
      return cnn_loss_grad(params, input, target(0), grad, training, dropout_seed);
    case ModelKind::Ffn: return ffn_loss_grad(params, input, target, grad);
  }
  return 0.0;
}

double batch_loss_and_gradient(const ModelParams& params, std::span<const MatrixXd> inputs,
                               std::span<const VectorXd> targets, ModelParams* grad, bool training,
                               std::uint64_t dropout_seed) {
  if (inputs.size() != targets.size()) fail("inputs/targets size mismatch");
  if (inputs.empty()) fail("empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    total += loss_and_gradient(params, inputs[i], targets[i], grad, training, dropout_seed + i);
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  if (grad)
    for (auto& t : grad->tensors) t.value *= inv_n;
  return total * inv_n;
}

double lstm_batch_loss_grad(const ModelParams& params, std::span<const MatrixXd* const> sequences,
                            std::span<const double> labels, ModelParams* grad) {
  using namespace lstm_slot;
  if (params.kind() != ModelKind::Lstm) fail("lstm_batch_loss_grad called on a non-LSTM model");
  if (sequences.size() != labels.size()) fail("inputs/targets size mismatch");
  if (sequences.empty()) fail("empty batch");
  const BatchLstm r = run_batch_lstm(params, sequences);
  const Index nb = static_cast<Index>(sequences.size());
  double loss = 0.0;
  VectorXd dz(nb);
  for (Index j = 0; j < nb; ++j) {
    const double y = labels[static_cast<std::size_t>(j)];
    loss += bce_from_logit(r.logits(j), y);
    dz(j) = sigmoid(r.logits(j)) - y;
  }
  if (!grad) return loss;
  ModelParams& g = *grad;
  g[kOutW].noalias() += dz.transpose() * r.pooled.transpose();
  g[kOutB](0, 0) += dz.sum();
  const Index hs = params[kFwdWh].cols();
  MatrixXd dpool = params[kOutW].row(0).transpose() * dz.transpose();  // 2h x B
  for (Index j = 0; j < nb; ++j) dpool.col(j) /= static_cast<double>(r.lens[static_cast<std::size_t>(j)]);
  backprop_batch_direction(r.fwd, params[kFwdWh], dpool.topRows(hs), r.lens, g[kFwdWx], g[kFwdWh], g[kFwdB]);
  backprop_batch_direction(r.bwd, params[kBwdWh], dpool.bottomRows(hs), r.lens, g[kBwdWx], g[kBwdWh], g[kBwdB]);
  return loss;
}

std::vector<double> lstm_batch_predict(const ModelParams& params, std::span<const MatrixXd* const> sequences) {
  if (params.kind() != ModelKind::Lstm) fail("lstm_batch_predict called on a non-LSTM model");
  if (sequences.empty()) return {};
  const BatchLstm r = run_batch_lstm(params, sequences);
  std::vector<double> out;
  for (Index j = 0; j < r.logits.size(); ++j) out.push_back(sigmoid(r.logits(j)));
  return out;
}

GradientCheckResult gradient_check(const ModelParams& params, std::span<const MatrixXd> inputs,
                                   std::span<const VectorXd> targets, bool training, std::uint64_t dropout_seed,
                                   double step) {
  ModelParams analytic = params.zeros_like();
  batch_loss_and_gradient(params, inputs, targets, &analytic, training, dropout_seed);
  ModelParams probe = params;
  GradientCheckResult res;
  for (std::size_t ti = 0; ti < probe.tensors.size(); ++ti) {
    auto& w = probe.tensors[ti].value;
    for (Index k = 0; k < w.size(); ++k) {
      const double orig = w.data()[k];
      w.data()[k] = orig + step;
      const double up = batch_loss_and_gradient(probe, inputs, targets, nullptr, training, dropout_seed);
      w.data()[k] = orig - step;
      const double down = batch_loss_and_gradient(probe, inputs, targets, nullptr, training, dropout_seed);
      w.data()[k] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.tensors[ti].value.data()[k];
      // Denominator floor keeps gradients at roundoff level from dominating.
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
      const double rel = std::abs(a - numeric) / denom;
      ++res.coordinates;
      if (rel > res.max_relative_error) {
        res.max_relative_error = rel;
        res.worst_tensor = ti;
        res.worst_index = k;
      }
    }
  }
  return res;
}

}  // namespace gazelens::nn
