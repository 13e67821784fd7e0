#include "hetknock/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetknock/errors.hpp"
#include "hetknock/grid.hpp"
#include "hetknock/normal.hpp"
#include "hetknock/rng.hpp"
#include "hetknock/split.hpp"

namespace hetknock {

namespace {

void check_triplet(std::span<const double> x, std::span<const double> xk,
                   std::span<const double> resid) {
  if (x.empty()) fail(ErrorCode::LengthMismatch, "empty sample");
  if (x.size() != xk.size() || x.size() != resid.size())
    fail(ErrorCode::LengthMismatch, "column lengths differ");
}

inline double indicator_diff(double x, double xk, double brk) {
  return (x <= brk ? 1.0 : 0.0) - (xk <= brk ? 1.0 : 0.0);
}

// Mean and standard deviation (denominator n) of d_i * resid_i^2.
std::pair<double, double> term_moments(std::span<const double> x, std::span<const double> xk,
                                       std::span<const double> resid, double brk) {
  const auto n = x.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += indicator_diff(x[i], xk[i], brk) * resid[i] * resid[i];
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dv = indicator_diff(x[i], xk[i], brk) * resid[i] * resid[i] - mean;
    ss += dv * dv;
  }
  return {mean, std::sqrt(ss / static_cast<double>(n))};
}

}  // namespace

double vd_tstat(std::span<const double> x, std::span<const double> xk,
                std::span<const double> resid, double brk) {
  check_triplet(x, xk, resid);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    sum += indicator_diff(x[i], xk[i], brk) * resid[i] * resid[i];
  return sum / std::sqrt(static_cast<double>(x.size()));
}

double vd_sigma(std::span<const double> x, std::span<const double> xk,
                std::span<const double> resid, double brk) {
  check_triplet(x, xk, resid);
  return term_moments(x, xk, resid, brk).second;
}

double screen_gstat(std::span<const double> x, std::span<const double> xk,
                    std::span<const double> resid, double brk) {
  check_triplet(x, xk, resid);
  return term_moments(x, xk, resid, brk).first;
}

double p_value(double statistic) { return two_sided_p_value(statistic); }

double select_break(std::span<const double> x, std::span<const double> xk,
                    std::span<const double> resid, std::span<const double> candidates) {
  check_triplet(x, xk, resid);
  if (candidates.empty()) fail(ErrorCode::EmptyGrid, "no break candidates");
  double best_break = candidates[0];
  double best_abs = -1.0;
  for (const double a : candidates) {
    const double g = std::abs(screen_gstat(x, xk, resid, a));
    if (g > best_abs) {  // strict: ties keep the smallest candidate
      best_abs = g;
      best_break = a;
    }
  }
  return best_break;
}

int select_feature(const Dataset& screen, const Eigen::VectorXd& resid_screen,
                   std::span<const double> breaks) {
  if (screen.p() < 1) fail(ErrorCode::EmptyColumn, "need at least one feature");
  if (!screen.has_knockoffs()) fail(ErrorCode::BadArgument, "dataset has no knockoff columns");
  if (static_cast<std::size_t>(screen.p()) != breaks.size())
    fail(ErrorCode::LengthMismatch, "one break per feature");
  const auto resid = vector_span(resid_screen);
  int best = 0;
  double best_abs = -1.0;
  for (Eigen::Index l = 0; l < screen.p(); ++l) {
    const double g = std::abs(screen_gstat(column_span(screen.x, l),
                                           column_span(*screen.x_knock, l), resid,
                                           breaks[static_cast<std::size_t>(l)]));
    if (g > best_abs) {  // strict: ties keep the lowest index
      best_abs = g;
      best = static_cast<int>(l);
    }
  }
  return best;
}

std::vector<int> benjamini_hochberg(const std::vector<double>& p_values, double q) {
  if (!(q > 0.0 && q < 1.0)) fail(ErrorCode::BadLevel, "q outside (0, 1)");
  for (const double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::BadLevel, "p-value outside [0, 1]");
  const int m = static_cast<int>(p_values.size());
  std::vector<int> order(p_values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (p_values[static_cast<std::size_t>(a)] != p_values[static_cast<std::size_t>(b)])
      return p_values[static_cast<std::size_t>(a)] < p_values[static_cast<std::size_t>(b)];
    return a < b;
  });
  int cut = 0;  // number of smallest p-values rejected
  for (int k = m; k >= 1; --k) {
    if (p_values[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])] <=
        q * k / m) {
      cut = k;
      break;
    }
  }
  std::vector<int> rejected(order.begin(), order.begin() + cut);
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

namespace {

std::vector<std::pair<double, bool>> decide(double statistic, const std::vector<double>& alphas) {
  std::vector<std::pair<double, bool>> out;
  out.reserve(alphas.size());
  for (const double a : alphas)
    out.emplace_back(a, std::abs(statistic) > two_sided_threshold(a));
  return out;
}

TestReport studentized_report(const TestInput& in, int feature, double brk,
                              const std::vector<double>& alphas) {
  const auto x = column_span(in.stat.x, feature);
  const auto xk = column_span(*in.stat.x_knock, feature);
  const auto resid = vector_span(in.resid_stat);
  const double tstat = vd_tstat(x, xk, resid, brk);
  const double sigma = vd_sigma(x, xk, resid, brk);
  if (sigma == 0.0)
    fail(ErrorCode::DegenerateVariance,
         "variance estimate is zero at break " + std::to_string(brk) +
             " for feature " + std::to_string(feature + 1) +
             "; the indicator difference never fires or residuals vanish");
  TestReport rep;
  rep.statistic = tstat / sigma;
  rep.p = p_value(rep.statistic);
  rep.break_used = brk;
  rep.feature_tested = feature;
  rep.alpha_decisions = decide(rep.statistic, alphas);
  rep.n_stat = static_cast<int>(in.stat.n());
  rep.n_screen = static_cast<int>(in.screen.n());
  return rep;
}

}  // namespace

TestInput make_test_input(const Dataset& ds, double gamma0, const TestOptions& opts,
                          const ForestConfig& forest_cfg) {
  validate(ds);
  if (!ds.has_knockoffs()) fail(ErrorCode::BadArgument, "dataset has no knockoff columns");

  // Optional held-out training half; the remainder becomes the inference
  // sample. Everything downstream sees only the inference rows.
  Dataset inference;
  const Dataset* train = &ds;
  Dataset train_half;
  if (opts.center == CenterSplit::Independent) {
    SampleSplit half = split_sample(static_cast<int>(ds.n()), 0.5,
                                    derive_seed(opts.seed, stream::kTest, 1));
    train_half = ds.subset(half.idx_stat);
    inference = ds.subset(half.idx_screen);
    train = &train_half;
  } else {
    inference = ds;
  }

  ForestModel forest = fit_forest(train->x, train->y, forest_cfg);

  TestInput in;
  if (gamma0 >= 1.0) {
    in.stat = std::move(inference);
    in.resid_stat = residuals(forest, in.stat.x, in.stat.y);
    in.screen.x.resize(0, ds.p());
    in.screen.y.resize(0);
    in.screen.x_knock.emplace(0, ds.p());
    in.resid_screen.resize(0);
    return in;
  }

  SampleSplit split =
      split_sample(static_cast<int>(inference.n()), gamma0, opts.seed);
  in.stat = inference.subset(split.idx_stat);
  in.screen = inference.subset(split.idx_screen);
  in.resid_stat = residuals(forest, in.stat.x, in.stat.y);
  in.resid_screen = residuals(forest, in.screen.x, in.screen.y);
  return in;
}

TestReport vd_from_input(const TestInput& in, int feature, const TestOptions& opts) {
  if (feature < 0 || feature >= in.stat.p())
    fail(ErrorCode::BadArgument, "feature index out of range");
  double brk;
  if (opts.fixed_break) {
    brk = *opts.fixed_break;
  } else {
    if (in.screen.n() == 0) fail(ErrorCode::EmptyColumn, "break selection needs a screening sample");
    const std::vector<double> cands =
        break_candidates(column_span(in.screen.x, feature), opts.r_count);
    brk = select_break(column_span(in.screen.x, feature), column_span(*in.screen.x_knock, feature),
                       vector_span(in.resid_screen), cands);
  }
  return studentized_report(in, feature, brk, opts.alphas);
}

TestReport vdbp_from_input(const TestInput& in, const TestOptions& opts) {
  if (in.screen.n() == 0)
    fail(ErrorCode::EmptyColumn, "feature screening needs a screening sample");
  const auto p = in.screen.p();
  const auto resid = vector_span(in.resid_screen);

  // Per-feature break, fixed or selected on the screening sample, then the
  // feature with the largest absolute screening statistic wins.
  std::vector<double> breaks(static_cast<std::size_t>(p));
  for (Eigen::Index l = 0; l < p; ++l) {
    if (opts.fixed_break) {
      breaks[static_cast<std::size_t>(l)] = *opts.fixed_break;
    } else {
      const auto xcol = column_span(in.screen.x, l);
      const std::vector<double> cands = break_candidates(xcol, opts.r_count);
      breaks[static_cast<std::size_t>(l)] =
          select_break(xcol, column_span(*in.screen.x_knock, l), resid, cands);
    }
  }
  const int chosen = select_feature(in.screen, in.resid_screen, breaks);
  return studentized_report(in, chosen, breaks[static_cast<std::size_t>(chosen)],
                            opts.alphas);
}

TestReport vd_test(const Dataset& ds, int feature, const TestOptions& opts,
                   const ForestConfig& forest_cfg) {
  const double gamma0 = opts.fixed_break ? 1.0 : 2.0 / 3.0;
  TestInput in = make_test_input(ds, gamma0, opts, forest_cfg);
  return vd_from_input(in, feature, opts);
}

TestReport vdbp_test(const Dataset& ds, const TestOptions& opts,
                     const ForestConfig& forest_cfg) {
  TestInput in = make_test_input(ds, 1.0 / 3.0, opts, forest_cfg);
  return vdbp_from_input(in, opts);
}

}  // namespace hetknock
