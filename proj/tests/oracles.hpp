#pragma once

// Independent reference implementations used to check the library.

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gazelens/corpus.hpp"

namespace oracle {

/// P(s+ > s-) + 0.5 P(s+ = s-) over all positive/negative pairs.
double pairwise_auc(std::span<const double> scores, std::span<const int> labels);

/// out(t, o) = b(o) + sum_j sum_c in(t + j - pad, c) * W(o, j*C + c), zero outside.
Eigen::MatrixXd naive_conv(const Eigen::MatrixXd& in, const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                           int kernel, bool same);

/// Cyclic Jacobi eigenvalue iteration on a symmetric matrix. Eigenvalues
/// descending, eigenvectors as columns.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a, int sweeps = 100);

/// Covariance (population) of row vectors, computed with explicit loops.
Eigen::MatrixXd covariance(const std::vector<Eigen::VectorXd>& rows);

/// For each (sentence, word): mean over fixated dyslexic words minus mean over
/// fixated control words of each measure (raw values).
std::map<std::pair<std::string, std::size_t>, std::vector<double>> group_mean_differences(
    const gazelens::Dataset& d);

/// Mean and population std per measure over fixated words, via flat lists.
std::pair<std::vector<double>, std::vector<double>> flat_moments(const std::vector<std::vector<double>>& words);

/// Two-sample Welch t statistic.
double welch_t(std::span<const double> a, std::span<const double> b);

}  // namespace oracle
