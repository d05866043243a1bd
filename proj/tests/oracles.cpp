#include "oracles.hpp"

#include <cmath>
#include <numeric>

namespace oracle {

double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

Eigen::MatrixXd naive_conv(const Eigen::MatrixXd& in, const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                           int kernel, bool same) {
  const int T = static_cast<int>(in.rows());
  const int C = static_cast<int>(in.cols());
  const int pad = same ? (kernel - 1) / 2 : 0;
  const int out_len = same ? T : T - kernel + 1;
  Eigen::MatrixXd out(out_len, w.rows());
  for (int t = 0; t < out_len; ++t) {
    for (int o = 0; o < w.rows(); ++o) {
      double acc = b(o);
      for (int j = 0; j < kernel; ++j) {
        const int src = t + j - pad;
        if (src < 0 || src >= T) continue;
        for (int c = 0; c < C; ++c) acc += in(src, c) * w(o, j * C + c);
      }
      out(t, o) = acc;
    }
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a, int sweeps) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = a.squaredNorm();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * scale) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const Eigen::VectorXd cp = a.col(p), cq = a.col(q);
        a.col(p) = c * cp - s * cq;
        a.col(q) = s * cp + c * cq;
        const Eigen::RowVectorXd rp = a.row(p), rq = a.row(q);
        a.row(p) = c * rp - s * rq;
        a.row(q) = s * rp + c * rq;
        const Eigen::VectorXd vp = v.col(p), vq = v.col(q);
        v.col(p) = c * vp - s * vq;
        v.col(q) = s * vp + c * vq;
      }
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (int i = 0; i < n; ++i) {
    values(i) = a(order[i], order[i]);
    vectors.col(i) = v.col(order[i]);
  }
  return {values, vectors};
}

Eigen::MatrixXd covariance(const std::vector<Eigen::VectorXd>& rows) {
  const auto d = rows.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& r : rows)
    for (Eigen::Index i = 0; i < d; ++i) mean(i) += r(i);
  mean /= static_cast<double>(rows.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : rows)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) cov(i, j) += (r(i) - mean(i)) * (r(j) - mean(j));
  return cov / static_cast<double>(rows.size());
}

std::map<std::pair<std::string, std::size_t>, std::vector<double>> group_mean_differences(
    const gazelens::Dataset& d) {
  std::map<std::pair<std::string, std::size_t>, std::vector<std::vector<double>>> by[2];
  const auto labels = d.label_map();
  for (const auto& t : d.trials) {
    const int y = labels.at(t.subject_id);
    for (std::size_t k = 0; k < t.measures.size(); ++k) {
      bool fixated = false;
      for (double v : t.measures[k].values) fixated = fixated || v != 0.0;
      if (!fixated) continue;
      by[y][{t.sentence_id, k}].push_back({t.measures[k].values.begin(), t.measures[k].values.end()});
    }
  }
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> out;
  for (const auto& [pos, pos_rows] : by[1]) {
    auto it = by[0].find(pos);
    if (it == by[0].end()) continue;
    std::vector<double> diff(gazelens::kNumMeasures);
    for (std::size_t m = 0; m < diff.size(); ++m) {
      double a = 0.0, b = 0.0;
      for (const auto& r : pos_rows) a += r[m];
      for (const auto& r : it->second) b += r[m];
      diff[m] = a / static_cast<double>(pos_rows.size()) - b / static_cast<double>(it->second.size());
    }
    out[pos] = diff;
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> flat_moments(const std::vector<std::vector<double>>& words) {
  const std::size_t m = words.front().size();
  std::vector<double> mean(m, 0.0), sd(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> col;
    for (const auto& w : words) col.push_back(w[j]);
    const double mu = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    double ss = 0.0;
    for (double x : col) ss += (x - mu) * (x - mu);
    mean[j] = mu;
    sd[j] = std::sqrt(ss / static_cast<double>(col.size()));
  }
  return {mean, sd};
}

double welch_t(std::span<const double> a, std::span<const double> b) {
  auto stats = [](std::span<const double> x) {
    const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return std::pair{mu, ss / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = stats(a);
  const auto [mb, vb] = stats(b);
  return (ma - mb) / std::sqrt(va / static_cast<double>(a.size()) + vb / static_cast<double>(b.size()));
}

}  // namespace oracle
