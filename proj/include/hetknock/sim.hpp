#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetknock/knockoffs.hpp"
#include "hetknock/stats.hpp"

namespace hetknock {

// Monte Carlo harness: synthetic regression designs with AR(1) feature
// dependence, heteroskedastic or homoskedastic noise, and per-rep test runs
// aggregated into rejection-rate tables.

enum class Dgp { M23, M24, M27, M28, M29, M30 };

enum class FeatureDist { Gaussian, StudentT10 };

enum class TestKind { Vd, Vdbp };

const char* to_string(Dgp d);
const char* to_string(FeatureDist d);
const char* to_string(TestKind t);
Dgp dgp_from_string(const std::string& s);

// Smallest feature count the mean/variance formulas reference.
int min_feature_count(Dgp d);

// Conditional mean and noise scale at one feature row (1-based feature k is
// row[k - 1]):
//   M23: mean x1 + x2,                    scale sqrt(exp(0.5 + x10 + x15))
//   M24: mean 2 x1 x2 + x3 + x4 + x5^2,   scale sqrt(exp(0.5 + x10 + x15))
//   M27/M29: mean as M24,                 scale 1
//   M28/M30: mean as M24,                 scale 1 + 3 * 1{x15 > 0}
double dgp_mean(std::span<const double> row, Dgp d);
double dgp_scale(std::span<const double> row, Dgp d);
double gen_response(std::span<const double> row, Dgp d, double noise);

// Sigma_lk = rho^|l - k|.
Eigen::MatrixXd ar1_covariance(int p, double rho);

// n rows with covariance sigma: Gaussian, or multivariate t with 10 degrees
// of freedom rescaled so the covariance (not the scatter matrix) is sigma.
Eigen::MatrixXd sample_features(int n, int p, double rho, FeatureDist dist,
                                std::uint64_t seed);

// Knockoffs drawn from the true conditional law X_j | X_{-j} under a known
// covariance; the idealised generator used by null diagnostics.
Eigen::MatrixXd ideal_knockoffs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& sigma,
                                std::uint64_t seed);

struct SimulationScenario {
  Dgp dgp = Dgp::M23;
  TestKind test = TestKind::Vd;
  int n = 700;
  int p = 20;
  double rho = 0.6;
  FeatureDist dist = FeatureDist::Gaussian;
  int reps = 100;
  std::vector<double> alphas{0.1, 0.05};
  int feature = -1;                  // 0-based tested feature for Vd; -1 = all
  std::optional<double> fixed_break; // unset = data-driven break selection
  std::uint64_t seed = 0;
  int threads = 1;
  ForestConfig forest;
  KnockoffGenConfig knockoffs;
  int r_count = 100;
};

struct RejectionCell {
  int feature = 0;      // 0-based; -1 for the feature-selecting test
  double alpha = 0.0;
  int rejections = 0;
  int reps = 0;
  double rate() const { return reps > 0 ? static_cast<double>(rejections) / reps : 0.0; }
  // Binomial standard error of the rate.
  double std_error() const;
};

struct RejectionTable {
  SimulationScenario scenario;
  std::vector<RejectionCell> cells;  // feature-major, alpha-minor
};

RejectionTable run_experiment(const SimulationScenario& sc);

// Monte Carlo estimate of the population screening moment
// E[(1{X_j <= a} - 1{Xk_j <= a}) * (scale(X) * eps)^2] under the scenario's
// design with idealised knockoffs; zero for a null feature.
struct MomentDiagnostic {
  double estimate = 0.0;
  double std_error = 0.0;
  long long draws = 0;
};

MomentDiagnostic null_moment_diagnostic(const SimulationScenario& sc, int feature,
                                        double brk, long long draws);

}  // namespace hetknock
