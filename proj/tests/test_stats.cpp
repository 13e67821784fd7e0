#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hetknock/errors.hpp"
#include "hetknock/normal.hpp"
#include "hetknock/rng.hpp"
#include "hetknock/sim.hpp"
#include "hetknock/stats.hpp"
#include "oracles.hpp"

using namespace hetknock;

namespace {

// Small heteroskedastic dataset with knockoffs; feature 0 drives the noise.
Dataset synthetic_dataset(int n, int p, std::uint64_t seed) {
  Dataset ds;
  ds.x = sample_features(n, p, 0.3, FeatureDist::Gaussian, seed);
  ds.x_knock = ideal_knockoffs(ds.x, ar1_covariance(p, 0.3), derive_seed(seed, 1));
  ds.y.resize(n);
  Rng rng = Rng::substream(seed, 2);
  for (int i = 0; i < n; ++i) {
    const double scale = 1.0 + 2.0 * (ds.x(i, 0) > 0.0 ? 1.0 : 0.0);
    ds.y(i) = ds.x(i, 1) + scale * rng.normal();
  }
  return ds;
}

ForestConfig fast_forest() {
  ForestConfig cfg;
  cfg.n_trees = 50;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("statistic oracle corpus: t, sigma, g") {
  for (const auto& c : oracle::kStatCases) {
    const double t = vd_tstat(c.x, c.xk, c.resid, c.brk);
    const double s = vd_sigma(c.x, c.xk, c.resid, c.brk);
    const double g = screen_gstat(c.x, c.xk, c.resid, c.brk);
    if (c.t == 0.0) CHECK(t == 0.0);
    else CHECK(t == doctest::Approx(c.t).epsilon(1e-12));
    if (c.sigma == 0.0) CHECK(s == 0.0);
    else CHECK(s == doctest::Approx(c.sigma).epsilon(1e-12));
    if (c.g == 0.0) CHECK(g == 0.0);
    else CHECK(g == doctest::Approx(c.g).epsilon(1e-12));
  }
}

TEST_CASE("statistics reject mismatched or empty inputs") {
  const std::vector<double> a{1.0, 2.0}, b{1.0};
  CHECK_THROWS_AS(vd_tstat(a, b, a, 0.5), Error);
  CHECK_THROWS_AS(vd_sigma(a, a, b, 0.5), Error);
  CHECK_THROWS_AS(screen_gstat({}, {}, {}, 0.5), Error);
}

TEST_CASE("g equals t over sqrt(n) on random data") {
  Rng rng(314);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng.bounded(200));
    std::vector<double> x(n), xk(n), e(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.normal();
      xk[i] = rng.normal();
      e[i] = rng.normal();
    }
    const double a = rng.normal() * 0.5;
    const double t = vd_tstat(x, xk, e, a);
    const double g = screen_gstat(x, xk, e, a);
    CHECK(g == doctest::Approx(t / std::sqrt(static_cast<double>(n))).epsilon(1e-12));
  }
}

TEST_CASE("select_break oracle corpus and tie handling") {
  for (const auto& c : oracle::kSelectCases)
    CHECK(select_break(c.x, c.xk, c.resid, c.cands) == c.brk);
  CHECK_THROWS_AS(
      select_break(std::vector<double>{1.0}, std::vector<double>{2.0},
                   std::vector<double>{1.0}, std::vector<double>{}),
      Error);
}

TEST_CASE("select_feature takes the largest |g| at each feature's own break") {
  // Hand-built screen sample: per-feature indicator patterns give
  // |G| = 0.5, 2.5, 2.0 at break 0, so feature 1 wins.
  Dataset ds;
  ds.x.resize(2, 3);
  ds.x << -1.0, -1.0, 5.0,
           5.0, -1.0, -1.0;
  ds.x_knock = Eigen::MatrixXd::Constant(2, 3, 5.0);
  ds.y = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd resid(2);
  resid << 1.0, 2.0;
  const std::vector<double> breaks{0.0, 0.0, 0.0};

  CHECK(select_feature(ds, resid, breaks) == 1);
  // Cross-check against the screening statistic directly.
  double best = -1.0;
  int arg = -1;
  for (int l = 0; l < 3; ++l) {
    const double g = std::abs(screen_gstat(column_span(ds.x, l),
                                           column_span(*ds.x_knock, l),
                                           vector_span(resid), breaks[static_cast<std::size_t>(l)]));
    if (g > best) {
      best = g;
      arg = l;
    }
  }
  CHECK(arg == 1);

  // Exact tie: identical columns, lowest index wins.
  Dataset tie;
  tie.x.resize(2, 2);
  tie.x << -1.0, -1.0,
            5.0,  5.0;
  tie.x_knock = Eigen::MatrixXd::Constant(2, 2, 5.0);
  tie.y = Eigen::VectorXd::Zero(2);
  CHECK(select_feature(tie, resid, std::vector<double>{0.0, 0.0}) == 0);

  // Single feature: nothing to choose.
  Dataset one;
  one.x = ds.x.leftCols(1);
  one.x_knock = ds.x_knock->leftCols(1);
  one.y = ds.y;
  CHECK(select_feature(one, resid, std::vector<double>{0.0}) == 0);

  CHECK_THROWS_AS(select_feature(ds, resid, std::vector<double>{0.0, 0.0}), Error);
  Dataset bare = ds;
  bare.x_knock.reset();
  CHECK_THROWS_AS(select_feature(bare, resid, breaks), Error);
}

TEST_CASE("benjamini-hochberg oracle corpus") {
  for (const auto& c : oracle::kBhCases) CHECK(benjamini_hochberg(c.p, c.q) == c.rejected);
  CHECK_THROWS_AS(benjamini_hochberg({0.5}, 0.0), Error);
  CHECK_THROWS_AS(benjamini_hochberg({0.5}, 1.0), Error);
  CHECK_THROWS_AS(benjamini_hochberg({1.5}, 0.1), Error);
  CHECK_THROWS_AS(benjamini_hochberg({-0.1}, 0.1), Error);
  CHECK(benjamini_hochberg({}, 0.1).empty());
}

TEST_CASE("p-value is monotone in |statistic| and symmetric") {
  double prev = 1.0;
  for (double s = 0.0; s <= 9.0; s += 0.03) {
    const double p = p_value(s);
    CHECK(p <= prev + 1e-15);
    CHECK(p == p_value(-s));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
}

TEST_CASE("decisions use the exact quantile threshold, strict inequality") {
  TestOptions opts;
  opts.fixed_break = 0.5;
  opts.alphas = {0.1, 0.05};

  // Assemble a report through the public surface and re-check its decisions.
  Dataset ds = synthetic_dataset(200, 4, 61);
  TestReport rep = vd_test(ds, 0, opts, fast_forest());
  REQUIRE(rep.alpha_decisions.size() == 2);
  for (const auto& [alpha, reject] : rep.alpha_decisions)
    CHECK(reject == (std::abs(rep.statistic) > two_sided_threshold(alpha)));

  // Rejecting at a smaller alpha implies rejecting at the larger one.
  const bool r10 = rep.alpha_decisions[0].second;
  const bool r05 = rep.alpha_decisions[1].second;
  if (r05) CHECK(r10);

  // p-value consistency: reject at alpha exactly when p < alpha (strict
  // statistic inequality maps to strict p inequality).
  for (const auto& [alpha, reject] : rep.alpha_decisions)
    CHECK(reject == (rep.p < alpha));
}

TEST_CASE("boundary statistic exactly at the threshold is accepted") {
  // |stat| == threshold must not reject: the rule is strictly greater.
  const double thr = two_sided_threshold(0.05);
  CHECK_FALSE(std::abs(thr) > thr);
  // And the report plumbing agrees: p_value(threshold) == alpha up to
  // rounding, and p < alpha is false.
  CHECK(p_value(thr) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK_FALSE(p_value(thr) < 0.05 - 1e-12);
}

TEST_CASE("vd fixed-break uses the whole sample and reports it") {
  Dataset ds = synthetic_dataset(150, 3, 7);
  TestOptions opts;
  opts.fixed_break = 0.0;
  TestReport rep = vd_test(ds, 0, opts, fast_forest());
  CHECK(rep.n_stat == 150);
  CHECK(rep.n_screen == 0);
  CHECK(rep.break_used == 0.0);
  CHECK(rep.feature_tested == 0);
  CHECK(rep.p == doctest::Approx(two_sided_p_value(rep.statistic)).epsilon(1e-12));
}

TEST_CASE("vd select mode splits 2:1 and picks the break from the grid range") {
  Dataset ds = synthetic_dataset(300, 3, 8);
  TestOptions opts;  // no fixed break -> selection
  TestReport rep = vd_test(ds, 0, opts, fast_forest());
  CHECK(rep.n_stat == 200);
  CHECK(rep.n_screen == 100);
  // The break lies inside the feature's observed range.
  CHECK(rep.break_used > ds.x.col(0).minCoeff());
  CHECK(rep.break_used < ds.x.col(0).maxCoeff());
}

TEST_CASE("vdbp splits 1:2 and tests the screened feature") {
  Dataset ds = synthetic_dataset(300, 4, 9);
  TestOptions opts;
  TestReport rep = vdbp_test(ds, opts, fast_forest());
  CHECK(rep.n_stat == 100);
  CHECK(rep.n_screen == 200);
  CHECK(rep.feature_tested >= 0);
  CHECK(rep.feature_tested < 4);
}

TEST_CASE("same seed gives identical reports; different seed differs") {
  Dataset ds = synthetic_dataset(240, 3, 10);
  TestOptions opts;
  opts.seed = 5;
  TestReport a = vd_test(ds, 0, opts, fast_forest());
  TestReport b = vd_test(ds, 0, opts, fast_forest());
  CHECK(a.statistic == b.statistic);
  CHECK(a.p == b.p);
  CHECK(a.break_used == b.break_used);

  opts.seed = 6;
  TestReport c = vd_test(ds, 0, opts, fast_forest());
  CHECK(a.statistic != c.statistic);
}

TEST_CASE("degenerate variance raises the dedicated error") {
  // Knockoffs identical to the features make every indicator difference
  // vanish, so sigma is exactly zero.
  Dataset ds = synthetic_dataset(100, 3, 11);
  ds.x_knock = ds.x;
  TestOptions opts;
  opts.fixed_break = 0.0;
  try {
    vd_test(ds, 0, opts, fast_forest());
    FAIL("expected DegenerateVariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateVariance);
  }
}

TEST_CASE("missing knockoffs are rejected up front") {
  Dataset ds = synthetic_dataset(100, 3, 12);
  ds.x_knock.reset();
  TestOptions opts;
  opts.fixed_break = 0.0;
  CHECK_THROWS_AS(vd_test(ds, 0, opts, fast_forest()), Error);
}

TEST_CASE("feature index is range-checked") {
  Dataset ds = synthetic_dataset(100, 3, 13);
  TestOptions opts;
  opts.fixed_break = 0.0;
  CHECK_THROWS_AS(vd_test(ds, -1, opts, fast_forest()), Error);
  CHECK_THROWS_AS(vd_test(ds, 3, opts, fast_forest()), Error);
}

TEST_CASE("independent centering trains on held-out rows") {
  Dataset ds = synthetic_dataset(320, 3, 14);
  TestOptions opts;
  opts.center = CenterSplit::Independent;
  TestReport rep = vd_test(ds, 0, opts, fast_forest());
  // Half is held out for training: 160 inference rows, split 2:1.
  CHECK(rep.n_stat + rep.n_screen == 160);
  CHECK(rep.n_stat == 107);  // nearest_int(2/3 * 160)

  TestOptions full;
  TestReport rep_full = vd_test(ds, 0, full, fast_forest());
  CHECK(rep_full.n_stat + rep_full.n_screen == 320);
  CHECK(rep.statistic != rep_full.statistic);
}

TEST_CASE("alpha levels are validated") {
  Dataset ds = synthetic_dataset(100, 3, 15);
  TestOptions opts;
  opts.fixed_break = 0.0;
  opts.alphas = {0.1, 1.5};
  CHECK_THROWS_AS(vd_test(ds, 0, opts, fast_forest()), Error);
}

TEST_CASE("vdbp identifies the variance-driving feature on clean data") {
  // Strong scale signal on feature 0; mean is zero so centering is easy.
  Dataset ds;
  const int n = 900;
  ds.x = sample_features(n, 5, 0.0, FeatureDist::Gaussian, 303);
  ds.x_knock = ideal_knockoffs(ds.x, ar1_covariance(5, 0.0), 304);
  ds.y.resize(n);
  Rng rng(305);
  for (int i = 0; i < n; ++i)
    ds.y(i) = (1.0 + 5.0 * (ds.x(i, 0) > 0.0 ? 1.0 : 0.0)) * rng.normal();
  TestOptions opts;
  TestReport rep = vdbp_test(ds, opts, fast_forest());
  CHECK(rep.feature_tested == 0);
  CHECK(std::abs(rep.statistic) > two_sided_threshold(0.05));
}
