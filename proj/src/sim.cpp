#include "hetknock/sim.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "hetknock/errors.hpp"
#include "hetknock/parallel.hpp"
#include "hetknock/rng.hpp"

namespace hetknock {

const char* to_string(Dgp d) {
  switch (d) {
    case Dgp::M23: return "m23";
    case Dgp::M24: return "m24";
    case Dgp::M27: return "m27";
    case Dgp::M28: return "m28";
    case Dgp::M29: return "m29";
    case Dgp::M30: return "m30";
  }
  return "?";
}

const char* to_string(FeatureDist d) {
  return d == FeatureDist::Gaussian ? "gaussian" : "t10";
}

const char* to_string(TestKind t) { return t == TestKind::Vd ? "vd" : "vdbp"; }

Dgp dgp_from_string(const std::string& s) {
  if (s == "m23") return Dgp::M23;
  if (s == "m24") return Dgp::M24;
  if (s == "m27") return Dgp::M27;
  if (s == "m28") return Dgp::M28;
  if (s == "m29") return Dgp::M29;
  if (s == "m30") return Dgp::M30;
  fail(ErrorCode::BadArgument, "unknown dgp '" + s + "'");
}

int min_feature_count(Dgp d) {
  switch (d) {
    case Dgp::M27:
    case Dgp::M29:
      return 5;
    default:
      return 15;  // the scale term references x15
  }
}

double dgp_mean(std::span<const double> row, Dgp d) {
  if (static_cast<int>(row.size()) < min_feature_count(d))
    fail(ErrorCode::ShortRow, "row shorter than the formula needs");
  if (d == Dgp::M23) return row[0] + row[1];
  return 2.0 * row[0] * row[1] + row[2] + row[3] + row[4] * row[4];
}

double dgp_scale(std::span<const double> row, Dgp d) {
  if (static_cast<int>(row.size()) < min_feature_count(d))
    fail(ErrorCode::ShortRow, "row shorter than the formula needs");
  switch (d) {
    case Dgp::M23:
    case Dgp::M24:
      return std::sqrt(std::exp(0.5 + row[9] + row[14]));
    case Dgp::M27:
    case Dgp::M29:
      return 1.0;
    case Dgp::M28:
    case Dgp::M30:
      return 1.0 + 3.0 * (row[14] > 0.0 ? 1.0 : 0.0);
  }
  return 1.0;
}

double gen_response(std::span<const double> row, Dgp d, double noise) {
  return dgp_mean(row, d) + dgp_scale(row, d) * noise;
}

Eigen::MatrixXd ar1_covariance(int p, double rho) {
  if (p < 1) fail(ErrorCode::ShapeMismatch, "need p >= 1");
  if (!(std::abs(rho) < 1.0)) fail(ErrorCode::BadRho, "|rho| must be < 1");
  Eigen::MatrixXd sigma(p, p);
  for (int l = 0; l < p; ++l)
    for (int k = 0; k < p; ++k) sigma(l, k) = std::pow(rho, std::abs(l - k));
  return sigma;
}

Eigen::MatrixXd sample_features(int n, int p, double rho, FeatureDist dist,
                                std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::TooFewRows, "need n >= 1");
  const Eigen::MatrixXd sigma = ar1_covariance(p, rho);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) fail(ErrorCode::CholeskyFailure, "covariance not SPD");
  const Eigen::MatrixXd chol_l = llt.matrixL();

  Rng rng = Rng::substream(seed, stream::kFeatures);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd z(p);
  constexpr double df = 10.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < p; ++k) z(k) = rng.normal();
    Eigen::VectorXd row = chol_l * z;
    if (dist == FeatureDist::StudentT10) {
      // Multivariate t via a chi-square mixing weight, rescaled by
      // (df - 2) / df so the covariance equals sigma rather than the scatter.
      const double w = rng.chi_square(static_cast<int>(df));
      row *= std::sqrt((df - 2.0) / w);
    }
    x.row(i) = row.transpose();
  }
  return x;
}

Eigen::MatrixXd ideal_knockoffs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& sigma,
                                std::uint64_t seed) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (sigma.rows() != p || sigma.cols() != p)
    fail(ErrorCode::ShapeMismatch, "covariance shape does not match features");

  Eigen::MatrixXd xk(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    // X_j | X_{-j} is Gaussian with weights sigma_{-j,-j}^{-1} sigma_{-j,j}.
    Eigen::MatrixXd rest(p - 1, p - 1);
    Eigen::VectorXd cross(p - 1);
    Eigen::Index a = 0;
    for (Eigen::Index l = 0; l < p; ++l) {
      if (l == j) continue;
      cross(a) = sigma(l, j);
      Eigen::Index b = 0;
      for (Eigen::Index k = 0; k < p; ++k) {
        if (k == j) continue;
        rest(a, b) = sigma(l, k);
        ++b;
      }
      ++a;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(rest);
    if (ldlt.info() != Eigen::Success) fail(ErrorCode::CholeskyFailure, "conditioning failed");
    const Eigen::VectorXd w = ldlt.solve(cross);
    const double var = std::max(0.0, sigma(j, j) - cross.dot(w));
    const double sd = std::sqrt(var);

    Rng rng = Rng::substream(seed, stream::kKnockoff, static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      double mu = 0.0;
      Eigen::Index c = 0;
      for (Eigen::Index l = 0; l < p; ++l) {
        if (l == j) continue;
        mu += w(c) * x(i, l);
        ++c;
      }
      xk(i, j) = mu + sd * rng.normal();
    }
  }
  return xk;
}

double RejectionCell::std_error() const {
  if (reps <= 0) return 0.0;
  const double r = rate();
  return std::sqrt(r * (1.0 - r) / static_cast<double>(reps));
}

namespace {

void check_scenario(const SimulationScenario& sc) {
  if (sc.reps < 1) fail(ErrorCode::BadArgument, "reps must be >= 1");
  if (sc.n < 3) fail(ErrorCode::TooFewRows, "n too small");
  if (sc.p < min_feature_count(sc.dgp)) fail(ErrorCode::ShortRow, "p too small for the dgp");
  if (!(std::abs(sc.rho) < 1.0)) fail(ErrorCode::BadRho, "|rho| must be < 1");
  if (sc.alphas.empty()) fail(ErrorCode::BadLevel, "need at least one alpha");
  if (sc.test == TestKind::Vd && sc.feature >= sc.p)
    fail(ErrorCode::BadArgument, "tested feature out of range");
}

Dataset make_rep_dataset(const SimulationScenario& sc, std::uint64_t rep_seed) {
  Dataset ds;
  ds.x = sample_features(sc.n, sc.p, sc.rho, sc.dist, derive_seed(rep_seed, stream::kFeatures));

  KnockoffGenConfig kcfg = sc.knockoffs;
  kcfg.seed = derive_seed(rep_seed, stream::kKnockoff);
  kcfg.threads = 1;  // parallelism lives at the rep level
  ds.x_knock = generate_knockoffs(ds.x, kcfg).first;

  Rng noise = Rng::substream(rep_seed, stream::kNoise);
  ds.y.resize(sc.n);
  std::vector<double> row(static_cast<std::size_t>(sc.p));
  for (int i = 0; i < sc.n; ++i) {
    for (int k = 0; k < sc.p; ++k) row[static_cast<std::size_t>(k)] = ds.x(i, k);
    ds.y(i) = gen_response(row, sc.dgp, noise.normal());
  }
  return ds;
}

}  // namespace

RejectionTable run_experiment(const SimulationScenario& sc) {
  check_scenario(sc);

  std::vector<int> features;
  if (sc.test == TestKind::Vd) {
    if (sc.feature >= 0) features.push_back(sc.feature);
    else for (int j = 0; j < sc.p; ++j) features.push_back(j);
  } else {
    features.push_back(-1);
  }
  const auto n_feat = features.size();
  const auto n_alpha = sc.alphas.size();

  // decisions[rep] holds one byte per (feature, alpha) pair; aggregation
  // after the parallel section is order-independent.
  std::vector<std::vector<std::uint8_t>> decisions(
      static_cast<std::size_t>(sc.reps),
      std::vector<std::uint8_t>(n_feat * n_alpha, 0));

  parallel_for(sc.reps, sc.threads, [&](int rep) {
    const std::uint64_t rep_seed =
        derive_seed(sc.seed, stream::kRep, static_cast<std::uint64_t>(rep));
    Dataset ds = make_rep_dataset(sc, rep_seed);

    TestOptions opts;
    opts.fixed_break = sc.fixed_break;
    opts.alphas = sc.alphas;
    opts.r_count = sc.r_count;
    opts.seed = derive_seed(rep_seed, stream::kSplit);

    ForestConfig fcfg = sc.forest;
    fcfg.seed = derive_seed(rep_seed, stream::kForest);
    fcfg.threads = 1;

    double gamma0;
    if (sc.test == TestKind::Vdbp) gamma0 = 1.0 / 3.0;
    else if (opts.fixed_break) gamma0 = 1.0;
    else gamma0 = 2.0 / 3.0;
    const TestInput in = make_test_input(ds, gamma0, opts, fcfg);

    auto& slot = decisions[static_cast<std::size_t>(rep)];
    for (std::size_t fi = 0; fi < n_feat; ++fi) {
      const TestReport rep_out = (sc.test == TestKind::Vd)
                                     ? vd_from_input(in, features[fi], opts)
                                     : vdbp_from_input(in, opts);
      for (std::size_t ai = 0; ai < n_alpha; ++ai)
        slot[fi * n_alpha + ai] = rep_out.alpha_decisions[ai].second ? 1 : 0;
    }
  });

  RejectionTable table;
  table.scenario = sc;
  table.cells.reserve(n_feat * n_alpha);
  for (std::size_t fi = 0; fi < n_feat; ++fi) {
    for (std::size_t ai = 0; ai < n_alpha; ++ai) {
      RejectionCell cell;
      cell.feature = features[fi];
      cell.alpha = sc.alphas[ai];
      cell.reps = sc.reps;
      int count = 0;
      for (int rep = 0; rep < sc.reps; ++rep)
        count += decisions[static_cast<std::size_t>(rep)][fi * n_alpha + ai];
      cell.rejections = count;
      table.cells.push_back(cell);
    }
  }
  return table;
}

MomentDiagnostic null_moment_diagnostic(const SimulationScenario& sc, int feature,
                                        double brk, long long draws) {
  check_scenario(sc);
  if (feature < 0 || feature >= sc.p) fail(ErrorCode::BadArgument, "feature out of range");
  if (draws < 2) fail(ErrorCode::BadArgument, "need at least 2 draws");

  const Eigen::MatrixXd sigma = ar1_covariance(sc.p, sc.rho);
  const int batch =
      static_cast<int>(std::max<long long>(1, std::min<long long>(sc.n, draws)));

  double sum = 0.0, sumsq = 0.0;
  long long done = 0;
  int batch_index = 0;
  while (done < draws) {
    const int m = static_cast<int>(std::min<long long>(batch, draws - done));
    const std::uint64_t bs = derive_seed(sc.seed, stream::kRep, static_cast<std::uint64_t>(batch_index));
    Eigen::MatrixXd x = sample_features(m, sc.p, sc.rho, sc.dist,
                                        derive_seed(bs, stream::kFeatures));
    Eigen::MatrixXd xk = ideal_knockoffs(x, sigma, derive_seed(bs, stream::kKnockoff));
    Rng noise = Rng::substream(bs, stream::kNoise);
    std::vector<double> row(static_cast<std::size_t>(sc.p));
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < sc.p; ++k) row[static_cast<std::size_t>(k)] = x(i, k);
      const double scaled = dgp_scale(row, sc.dgp) * noise.normal();
      const double d = (x(i, feature) <= brk ? 1.0 : 0.0) - (xk(i, feature) <= brk ? 1.0 : 0.0);
      const double term = d * scaled * scaled;
      sum += term;
      sumsq += term * term;
    }
    done += m;
    ++batch_index;
  }

  MomentDiagnostic out;
  out.draws = draws;
  out.estimate = sum / static_cast<double>(draws);
  const double var = std::max(0.0, sumsq / static_cast<double>(draws) - out.estimate * out.estimate);
  out.std_error = std::sqrt(var / static_cast<double>(draws));
  return out;
}

}  // namespace hetknock
