#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace hetknock {

// Quantile with linear interpolation between order statistics (the "type 7"
// convention): h = (n - 1) * prob, result = v[floor(h)] + frac * (v[floor(h)
// + 1] - v[floor(h)]). Input must be sorted and non-empty.
double quantile_type7(std::span<const double> sorted_values, double prob);

// Candidate break points per feature: r_count evenly spaced values from the
// first to the third quartile of the corresponding column. A constant column
// (equal quartiles) collapses to the single repeated value.
struct BreakGrid {
  std::vector<std::vector<double>> candidates;
  int r_count = 0;
};

BreakGrid build_break_grid(const Eigen::MatrixXd& columns, int r_count);

// Grid for one column, same convention.
std::vector<double> break_candidates(std::span<const double> values, int r_count);

}  // namespace hetknock
