#include "hetknock/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetknock/errors.hpp"
#include "hetknock/rng.hpp"

namespace hetknock {

long long nearest_int(double x) {
  double f = std::floor(x);
  double frac = x - f;
  if (frac > 0.5) return static_cast<long long>(f) + 1;
  if (frac < 0.5) return static_cast<long long>(f);
  // Exact half: round to even.
  long long lo = static_cast<long long>(f);
  return (lo % 2 == 0) ? lo : lo + 1;
}

SampleSplit split_sample(int n, double gamma0, std::uint64_t seed) {
  if (n < 3) fail(ErrorCode::TooFewRows, "need at least 3 rows to split");
  if (!(gamma0 > 0.0 && gamma0 < 1.0)) fail(ErrorCode::BadFraction, "gamma0 outside (0, 1)");

  long long n1ll = nearest_int(gamma0 * n);
  if (n1ll < 0) n1ll = 0;
  if (n1ll > n) n1ll = n;
  const int n1 = static_cast<int>(n1ll);

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::substream(seed, stream::kSplit);
  // Fisher-Yates; std::shuffle is not specified bit-for-bit, this is.
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }

  SampleSplit out;
  out.idx_stat.assign(idx.begin(), idx.begin() + n1);
  out.idx_screen.assign(idx.begin() + n1, idx.end());
  std::sort(out.idx_stat.begin(), out.idx_stat.end());
  std::sort(out.idx_screen.begin(), out.idx_screen.end());
  return out;
}

}  // namespace hetknock
