#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "hetknock/dataset.hpp"

namespace hetknock {

// Coordinate-wise Gaussian knockoff generator. Each column j gets a
// synthetic copy drawn from the estimated conditional law of X_j given the
// screened neighbour columns, with the self-covariance shrunk by s_hat to
// decorrelate the copy from the original while keeping the joint second
// moments consistent.

struct KnockoffGenConfig {
  double screen_fraction = 0.25;  // |screen set| = min(p, nint(frac * n))
  double psd_tolerance = 1e-10;   // slack for eigenvalue feasibility checks
  std::uint64_t seed = 0;
  int threads = 1;
};

struct CoordinateModel {
  std::vector<int> screen_set;  // ascending, contains j
  double s_hat = 0.0;           // decorrelation shift in [0, cov(j, j)]
  Eigen::VectorXd coef;         // regression weights on the screened columns
  double offset = 0.0;
  double var = 0.0;             // conditional variance, clamped at 0
};

struct KnockoffModel {
  std::vector<CoordinateModel> coords;
};

struct CovarianceEstimate {
  Eigen::MatrixXd cov;   // denominator n - 1
  Eigen::VectorXd mean;
};

CovarianceEstimate sample_covariance(const Eigen::MatrixXd& x);

// Indices of the `size` columns most correlated in absolute value with
// column j (j itself always first in rank); returned ascending. Ties break
// toward the lower index.
std::vector<int> screen_features(const Eigen::MatrixXd& cov, int j, int size);

// Largest feasible decorrelation shift: the feasible s closest to cov(j, j),
// searched on [0, cov(j, j)] by bisection to 1e-8. Feasible means the
// augmented covariance (screened block bordered by the shifted
// cross-covariance column) stays positive semidefinite up to psd_tol.
double solve_decorrelation_scalar(const Eigen::MatrixXd& cov_sub, int j_local, double psd_tol);

// Conditional law of the knockoff coordinate given the screened columns.
// The screened block is inverted by eigendecomposition; eigenvalues below
// 1e-10 times the largest are treated as zero (pseudoinverse).
CoordinateModel fit_coordinate_model(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean,
                                     int j, std::vector<int> screen_set, double s_hat);

// Knockoff matrix plus the per-coordinate models that produced it. Column j
// is drawn with the substream (seed, j), so the output is independent of
// thread count.
std::pair<Eigen::MatrixXd, KnockoffModel> generate_knockoffs(const Eigen::MatrixXd& x,
                                                             const KnockoffGenConfig& cfg);

struct KnockoffDiagnostics {
  Eigen::VectorXd per_feature_corr;  // corr(x_j, xk_j)
  double mean_sq_offdiag_dev = 0.0;  // mean over l != k of (cov(xk_l, x_k) - cov(x_l, x_k))^2
};

KnockoffDiagnostics knockoff_diagnostics(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xk);

}  // namespace hetknock
