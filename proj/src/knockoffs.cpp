#include "hetknock/knockoffs.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hetknock/errors.hpp"
#include "hetknock/parallel.hpp"
#include "hetknock/rng.hpp"
#include "hetknock/split.hpp"

namespace hetknock {

namespace {

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::CholeskyFailure, "eigenvalue decomposition failed");
  return es.eigenvalues().minCoeff();
}

// Screened covariance block bordered by the shifted cross-covariance column:
// rows/cols of cov_sub plus one extra coordinate whose covariance with the
// block is cov_sub.col(j) except the j entry, replaced by cov(j, j) - s, and
// whose own variance is cov(j, j).
Eigen::MatrixXd augmented_covariance(const Eigen::MatrixXd& cov_sub, int j_local, double s) {
  const Eigen::Index m = cov_sub.rows();
  Eigen::MatrixXd aug(m + 1, m + 1);
  aug.topLeftCorner(m, m) = cov_sub;
  Eigen::VectorXd v = cov_sub.col(j_local);
  v(j_local) = cov_sub(j_local, j_local) - s;
  aug.topRightCorner(m, 1) = v;
  aug.bottomLeftCorner(1, m) = v.transpose();
  aug(m, m) = cov_sub(j_local, j_local);
  return aug;
}

}  // namespace

CovarianceEstimate sample_covariance(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) fail(ErrorCode::TooFewRows, "covariance needs at least 2 rows");
  CovarianceEstimate est;
  est.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - est.mean.transpose();
  est.cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  return est;
}

std::vector<int> screen_features(const Eigen::MatrixXd& cov, int j, int size) {
  const int p = static_cast<int>(cov.cols());
  if (j < 0 || j >= p) fail(ErrorCode::BadArgument, "feature index out of range");
  if (size < 1 || size > p) fail(ErrorCode::BadArgument, "screen size out of range");
  const double vjj = cov(j, j);
  if (vjj <= 0.0) fail(ErrorCode::ZeroVariance, "feature " + std::to_string(j + 1) +
                                                    " has zero sample variance");

  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> score(static_cast<std::size_t>(p), 0.0);
  for (int k = 0; k < p; ++k) {
    if (k == j) {
      score[static_cast<std::size_t>(k)] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double vkk = cov(k, k);
    score[static_cast<std::size_t>(k)] =
        vkk > 0.0 ? std::abs(cov(j, k)) / std::sqrt(vjj * vkk) : 0.0;
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = score[static_cast<std::size_t>(a)];
    const double sb = score[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(size));
  std::sort(order.begin(), order.end());
  return order;
}

double solve_decorrelation_scalar(const Eigen::MatrixXd& cov_sub, int j_local, double psd_tol) {
  if (cov_sub.rows() != cov_sub.cols()) fail(ErrorCode::ShapeMismatch, "covariance not square");
  if (j_local < 0 || j_local >= cov_sub.rows())
    fail(ErrorCode::BadArgument, "local index out of range");
  const double vjj = cov_sub(j_local, j_local);
  if (vjj <= 0.0) return 0.0;

  auto feasible = [&](double s) {
    return min_eigenvalue(augmented_covariance(cov_sub, j_local, s)) >= -psd_tol;
  };

  // s = vjj zeroes the covariance between the copy and the original; take it
  // whenever feasible. s = 0 is always feasible (the augmented matrix is then
  // a genuine sample covariance), so bisection on [0, vjj] brackets the
  // feasibility boundary.
  if (feasible(vjj)) return vjj;
  double lo = 0.0, hi = vjj;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

CoordinateModel fit_coordinate_model(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean,
                                     int j, std::vector<int> screen_set, double s_hat) {
  const auto m = static_cast<Eigen::Index>(screen_set.size());
  Eigen::MatrixXd block(m, m);
  Eigen::VectorXd v(m);
  Eigen::VectorXd mean_sub(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const int ka = screen_set[static_cast<std::size_t>(a)];
    v(a) = (ka == j) ? cov(j, j) - s_hat : cov(ka, j);
    mean_sub(a) = mean(ka);
    for (Eigen::Index b = 0; b < m; ++b) block(a, b) = cov(ka, screen_set[static_cast<std::size_t>(b)]);
  }

  // Pseudoinverse via eigendecomposition; for a well-conditioned block every
  // eigenvalue survives and this is the plain inverse.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::CholeskyFailure, "eigenvalue decomposition failed");
  const Eigen::VectorXd& w = es.eigenvalues();
  const double cutoff = 1e-10 * std::max(w.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd winv = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i)
    if (w(i) > cutoff) winv(i) = 1.0 / w(i);
  const Eigen::MatrixXd pinv =
      es.eigenvectors() * winv.asDiagonal() * es.eigenvectors().transpose();

  CoordinateModel cm;
  cm.screen_set = std::move(screen_set);
  cm.s_hat = s_hat;
  cm.coef = pinv * v;
  cm.offset = mean(j) - cm.coef.dot(mean_sub);
  cm.var = std::max(0.0, cov(j, j) - v.dot(cm.coef));
  return cm;
}

std::pair<Eigen::MatrixXd, KnockoffModel> generate_knockoffs(const Eigen::MatrixXd& x,
                                                             const KnockoffGenConfig& cfg) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n < 2) fail(ErrorCode::TooFewRows, "knockoffs need at least 2 rows");
  if (p < 1) fail(ErrorCode::ShapeMismatch, "knockoffs need at least 1 column");
  if (!x.allFinite()) fail(ErrorCode::NonFiniteValue, "non-finite feature value");
  if (!(cfg.screen_fraction > 0.0 && cfg.screen_fraction <= 1.0))
    fail(ErrorCode::BadFraction, "screen_fraction outside (0, 1]");

  const CovarianceEstimate est = sample_covariance(x);
  long long want = nearest_int(cfg.screen_fraction * static_cast<double>(n));
  const int screen_size = static_cast<int>(std::clamp<long long>(want, 1, p));

  Eigen::MatrixXd xk(n, p);
  KnockoffModel model;
  model.coords.resize(static_cast<std::size_t>(p));

  parallel_for(static_cast<int>(p), cfg.threads, [&](int j) {
    std::vector<int> screen = screen_features(est.cov, j, screen_size);
    const auto it = std::find(screen.begin(), screen.end(), j);
    const int j_local = static_cast<int>(it - screen.begin());

    const auto m = static_cast<Eigen::Index>(screen.size());
    Eigen::MatrixXd cov_sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b)
        cov_sub(a, b) = est.cov(screen[static_cast<std::size_t>(a)],
                                screen[static_cast<std::size_t>(b)]);

    const double s_hat = solve_decorrelation_scalar(cov_sub, j_local, cfg.psd_tolerance);
    CoordinateModel cm = fit_coordinate_model(est.cov, est.mean, j, std::move(screen), s_hat);

    const double sd = std::sqrt(cm.var);
    Rng rng = Rng::substream(cfg.seed, stream::kKnockoff, static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      double mu = cm.offset;
      for (Eigen::Index a = 0; a < m; ++a)
        mu += cm.coef(a) * x(i, cm.screen_set[static_cast<std::size_t>(a)]);
      xk(i, j) = mu + sd * rng.normal();
    }
    model.coords[static_cast<std::size_t>(j)] = std::move(cm);
  });

  return {std::move(xk), std::move(model)};
}

KnockoffDiagnostics knockoff_diagnostics(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xk) {
  if (x.rows() != xk.rows() || x.cols() != xk.cols())
    fail(ErrorCode::ShapeMismatch, "knockoff matrix shape does not match features");
  if (x.rows() < 2) fail(ErrorCode::TooFewRows, "diagnostics need at least 2 rows");
  const auto n = x.rows();
  const auto p = x.cols();

  KnockoffDiagnostics d;
  d.per_feature_corr.resize(p);
  Eigen::MatrixXd cx = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd ck = xk.rowwise() - xk.colwise().mean();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double num = cx.col(j).dot(ck.col(j));
    const double den = std::sqrt(cx.col(j).squaredNorm() * ck.col(j).squaredNorm());
    d.per_feature_corr(j) = den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  }

  // Cross covariance cov(xk_l, x_k) against cov(x_l, x_k), off-diagonal only.
  const double denom = static_cast<double>(n - 1);
  Eigen::MatrixXd cross = (ck.transpose() * cx) / denom;
  Eigen::MatrixXd base = (cx.transpose() * cx) / denom;
  double acc = 0.0;
  for (Eigen::Index l = 0; l < p; ++l)
    for (Eigen::Index k = 0; k < p; ++k)
      if (l != k) {
        const double dv = cross(l, k) - base(l, k);
        acc += dv * dv;
      }
  d.mean_sq_offdiag_dev = p > 1 ? acc / static_cast<double>(p * (p - 1)) : 0.0;
  return d;
}

}  // namespace hetknock
