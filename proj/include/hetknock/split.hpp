#pragma once

#include <cstdint>
#include <vector>

namespace hetknock {

// Nearest integer with ties rounded to even, matching rint under the default
// rounding mode but independent of the floating-point environment.
long long nearest_int(double x);

// Disjoint index sets covering 0..n-1; idx_stat carries the statistic
// sample, idx_screen the screening sample.
struct SampleSplit {
  std::vector<int> idx_stat;
  std::vector<int> idx_screen;
};

// Random partition with |idx_stat| = nearest_int(gamma0 * n). Both halves
// are ascending; the draw depends only on (n, gamma0, seed).
SampleSplit split_sample(int n, double gamma0, std::uint64_t seed);

}  // namespace hetknock
