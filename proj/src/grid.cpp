#include "hetknock/grid.hpp"

#include <algorithm>
#include <cmath>

#include "hetknock/errors.hpp"

namespace hetknock {

double quantile_type7(std::span<const double> sorted_values, double prob) {
  if (sorted_values.empty()) fail(ErrorCode::EmptyColumn, "quantile of empty column");
  if (!(prob >= 0.0 && prob <= 1.0)) fail(ErrorCode::BadFraction, "quantile prob outside [0, 1]");
  const std::size_t n = sorted_values.size();
  const double h = static_cast<double>(n - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted_values[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::vector<double> break_candidates(std::span<const double> values, int r_count) {
  if (values.empty()) fail(ErrorCode::EmptyColumn, "break grid over empty column");
  if (r_count < 1) fail(ErrorCode::BadArgument, "r_count must be >= 1");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_type7(sorted, 0.25);
  const double hi = quantile_type7(sorted, 0.75);

  if (!(hi > lo) || r_count == 1) return {lo};

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(r_count));
  for (int r = 0; r < r_count; ++r) {
    // Direct affine form; no running accumulation, so spacing is uniform to
    // rounding and the endpoints are hit exactly.
    double v = (r == r_count - 1)
                   ? hi
                   : lo + (hi - lo) * (static_cast<double>(r) / (r_count - 1));
    if (out.empty() || v > out.back()) out.push_back(v);
  }
  return out;
}

BreakGrid build_break_grid(const Eigen::MatrixXd& columns, int r_count) {
  if (columns.rows() == 0) fail(ErrorCode::EmptyColumn, "break grid over empty sample");
  BreakGrid grid;
  grid.r_count = r_count;
  grid.candidates.reserve(static_cast<std::size_t>(columns.cols()));
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    grid.candidates.push_back(
        break_candidates({columns.col(j).data(), static_cast<std::size_t>(columns.rows())},
                         r_count));
  }
  return grid;
}

}  // namespace hetknock
