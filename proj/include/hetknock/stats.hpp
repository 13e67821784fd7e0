#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hetknock/dataset.hpp"
#include "hetknock/forest.hpp"

namespace hetknock {

// Variance-difference statistics. The building block is the indicator
// difference d_i = 1{x_i <= a} - 1{xk_i <= a}; a knockoff copy that matches
// the original's relation to the break contributes nothing, so any signal
// measures dependence of the squared residual on the feature's position
// relative to the break.

// sqrt(n) * mean of d_i * resid_i^2.
double vd_tstat(std::span<const double> x, std::span<const double> xk,
                std::span<const double> resid, double brk);

// Standard deviation (denominator n) of the terms d_i * resid_i^2.
double vd_sigma(std::span<const double> x, std::span<const double> xk,
                std::span<const double> resid, double brk);

// Plain mean of d_i * resid_i^2: the screening statistic. Equals
// vd_tstat / sqrt(n).
double screen_gstat(std::span<const double> x, std::span<const double> xk,
                    std::span<const double> resid, double brk);

// erfc-based two-sided tail mass for a studentized statistic.
double p_value(double statistic);

// Break maximising |screen_gstat| over the candidate list; ties take the
// smallest candidate.
double select_break(std::span<const double> x, std::span<const double> xk,
                    std::span<const double> resid, std::span<const double> candidates);

// Feature whose screening statistic at its own break is largest in absolute
// value; ties take the lowest index. breaks holds one break per feature.
int select_feature(const Dataset& screen, const Eigen::VectorXd& resid_screen,
                   std::span<const double> breaks);

// Indices (ascending) of hypotheses rejected by the Benjamini-Hochberg
// step-up rule at level q.
std::vector<int> benjamini_hochberg(const std::vector<double>& p_values, double q);

enum class CenterSplit {
  Full,         // forest trained on every inference row
  Independent,  // forest trained on a held-out half, inference on the rest
};

struct TestOptions {
  std::optional<double> fixed_break;        // unset selects the break from data
  std::vector<double> alphas{0.1, 0.05};
  int r_count = 100;                        // candidate breaks per feature
  CenterSplit center = CenterSplit::Full;
  std::uint64_t seed = 0;
};

struct TestReport {
  double statistic = 0.0;
  double p = 0.0;
  double break_used = 0.0;
  int feature_tested = 0;  // 0-based column index
  std::vector<std::pair<double, bool>> alpha_decisions;  // (alpha, reject)
  int n_stat = 0;
  int n_screen = 0;
};

// Split samples with residuals from a shared centering fit; built once and
// reused across per-feature tests.
struct TestInput {
  Dataset stat;
  Dataset screen;                // empty (n = 0) in fixed-break single-sample mode
  Eigen::VectorXd resid_stat;
  Eigen::VectorXd resid_screen;
};

// gamma0 is the statistic-sample fraction; gamma0 >= 1 skips splitting and
// the whole inference sample becomes the statistic sample.
TestInput make_test_input(const Dataset& ds, double gamma0, const TestOptions& opts,
                          const ForestConfig& forest_cfg);

// Single-feature variance-difference test. With a fixed break the statistic
// uses the whole inference sample; otherwise the sample is split 2:1 into
// statistic and screening parts, the break is chosen on the screening part
// and the statistic is formed on the statistic part.
TestReport vd_test(const Dataset& ds, int feature, const TestOptions& opts,
                   const ForestConfig& forest_cfg);

// Variance-difference test with data-driven feature selection: splits 1:2,
// screens every feature on the larger half (break per feature when not
// fixed), tests the feature with the largest absolute screening statistic.
TestReport vdbp_test(const Dataset& ds, const TestOptions& opts,
                     const ForestConfig& forest_cfg);

// Cores that reuse a prepared TestInput (one centering fit, one split).
TestReport vd_from_input(const TestInput& in, int feature, const TestOptions& opts);
TestReport vdbp_from_input(const TestInput& in, const TestOptions& opts);

}  // namespace hetknock
