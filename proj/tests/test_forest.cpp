#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hetknock/errors.hpp"
#include "hetknock/forest.hpp"
#include "hetknock/rng.hpp"
#include "hetknock/sim.hpp"

using namespace hetknock;

namespace {

// Smooth nonlinear signal with interactions; good enough to separate a
// working forest from a broken one. The formula reads the first five
// columns, so p >= 5.
void friedman_like(int n, int p, std::uint64_t seed, double noise_sd,
                   Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  REQUIRE(p >= 5);
  x = sample_features(n, p, 0.2, FeatureDist::Gaussian, seed);
  y.resize(n);
  Rng rng = Rng::substream(seed, 1);
  for (int i = 0; i < n; ++i)
    y(i) = 2.0 * x(i, 0) * x(i, 1) + x(i, 2) + x(i, 3) + x(i, 4) * x(i, 4) +
           noise_sd * rng.normal();
}

}  // namespace

TEST_CASE("mtry resolves to ceil(p / 3) when unset") {
  CHECK(resolve_mtry(0, 20) == 7);
  CHECK(resolve_mtry(0, 3) == 1);
  CHECK(resolve_mtry(0, 4) == 2);
  CHECK(resolve_mtry(0, 1) == 1);
  CHECK(resolve_mtry(5, 20) == 5);
  CHECK(resolve_mtry(33, 20) == 20);
}

TEST_CASE("forest fitting is deterministic and thread-count invariant") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  friedman_like(200, 6, 5, 0.5, x, y);
  ForestConfig cfg;
  cfg.n_trees = 40;
  cfg.seed = 9;
  cfg.threads = 1;
  ForestModel a = fit_forest(x, y, cfg);
  cfg.threads = 4;
  ForestModel b = fit_forest(x, y, cfg);
  const Eigen::VectorXd pa = predict(a, x);
  const Eigen::VectorXd pb = predict(b, x);
  CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);

  cfg.seed = 10;
  ForestModel c = fit_forest(x, y, cfg);
  CHECK((pa - predict(c, x)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("bootstrap_indices replays the exact in-bag draw") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  friedman_like(60, 5, 6, 0.5, x, y);
  ForestConfig cfg;
  cfg.n_trees = 3;
  cfg.seed = 4;
  fit_forest(x, y, cfg);  // consumes the same streams internally
  const std::vector<int> rows_a = bootstrap_indices(4, 1, 60);
  const std::vector<int> rows_b = bootstrap_indices(4, 1, 60);
  CHECK(rows_a == rows_b);
  CHECK(static_cast<int>(rows_a.size()) == 60);
  for (int r : rows_a) {
    CHECK(r >= 0);
    CHECK(r < 60);
  }
  CHECK(bootstrap_indices(4, 2, 60) != rows_a);
}

TEST_CASE("constant response gives constant predictions") {
  Eigen::MatrixXd x = sample_features(80, 3, 0.0, FeatureDist::Gaussian, 7);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(80, 3.25);
  ForestConfig cfg;
  cfg.n_trees = 10;
  ForestModel m = fit_forest(x, y, cfg);
  const Eigen::VectorXd pred = predict(m, x);
  CHECK((pred.array() - 3.25).abs().maxCoeff() == 0.0);
}

TEST_CASE("a deep forest recovers a step function") {
  const int n = 400;
  Eigen::MatrixXd x = sample_features(n, 2, 0.0, FeatureDist::Gaussian, 8);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = x(i, 0) > 0.0 ? 2.0 : -2.0;
  ForestConfig cfg;
  cfg.n_trees = 60;
  cfg.mtry = 2;
  cfg.seed = 11;
  ForestModel m = fit_forest(x, y, cfg);
  const Eigen::VectorXd pred = predict(m, x);
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(x(i, 0)) < 0.15) continue;  // skip the boundary band
    if ((pred(i) > 0.0) == (y(i) > 0.0)) ++correct;
  }
  CHECK(correct > 350 * 0.95);
}

TEST_CASE("predictions are clamped to the training response range") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  friedman_like(150, 6, 12, 0.5, x, y);
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 2;
  ForestModel m = fit_forest(x, y, cfg);
  Eigen::MatrixXd far = Eigen::MatrixXd::Constant(5, 6, 50.0);
  const Eigen::VectorXd pred = predict(m, far);
  for (int i = 0; i < 5; ++i) {
    CHECK(pred(i) >= m.y_min);
    CHECK(pred(i) <= m.y_max);
  }
}

TEST_CASE("out-of-bag error is finite and beats the mean predictor") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  friedman_like(500, 8, 13, 1.0, x, y);
  ForestConfig cfg;
  cfg.n_trees = 200;
  cfg.seed = 14;
  ForestModel m = fit_forest(x, y, cfg);
  const Eigen::VectorXd oob = oob_predictions(m, x);
  double sse = 0.0, sst = 0.0;
  const double ybar = y.mean();
  int used = 0;
  for (int i = 0; i < 500; ++i) {
    if (!std::isfinite(oob(i))) continue;
    sse += (y(i) - oob(i)) * (y(i) - oob(i));
    sst += (y(i) - ybar) * (y(i) - ybar);
    ++used;
  }
  CHECK(used > 490);  // with 200 trees nearly every row is OOB somewhere
  const double r2 = 1.0 - sse / sst;
  CHECK(r2 > 0.3);
}

TEST_CASE("oob predictions stabilise as trees grow") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  friedman_like(300, 8, 15, 1.0, x, y);
  ForestConfig cfg;
  cfg.seed = 16;
  cfg.n_trees = 100;
  const Eigen::VectorXd oob100 = oob_predictions(fit_forest(x, y, cfg), x);
  cfg.n_trees = 500;
  const Eigen::VectorXd oob500 = oob_predictions(fit_forest(x, y, cfg), x);
  double acc = 0.0;
  int used = 0;
  for (int i = 0; i < 300; ++i) {
    if (!std::isfinite(oob100(i)) || !std::isfinite(oob500(i))) continue;
    acc += (oob100(i) - oob500(i)) * (oob100(i) - oob500(i));
    ++used;
  }
  CHECK(used > 290);
  // Monte Carlo noise of the ensemble shrinks with tree count; the two
  // estimates must already agree closely.
  CHECK(std::sqrt(acc / used) < 0.5);
}

TEST_CASE("no-bootstrap mode uses every row and forbids oob") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  friedman_like(100, 5, 17, 0.2, x, y);
  ForestConfig cfg;
  cfg.n_trees = 10;
  cfg.bootstrap = false;
  ForestModel m = fit_forest(x, y, cfg);
  CHECK_THROWS_AS(oob_predictions(m, x), Error);
  // Without resampling all trees share the data; min_leaf still binds.
  const Eigen::VectorXd pred = predict(m, x);
  CHECK(pred.allFinite());
}

TEST_CASE("forest validates its inputs") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
  ForestConfig cfg;
  cfg.min_leaf = 5;
  CHECK_THROWS_AS(fit_forest(x, y, cfg), Error);  // n < 2 * min_leaf
  cfg.min_leaf = 0;
  CHECK_THROWS_AS(fit_forest(x, y, cfg), Error);
  cfg.min_leaf = 1;
  cfg.n_trees = 0;
  CHECK_THROWS_AS(fit_forest(x, y, cfg), Error);
  cfg.n_trees = 5;
  Eigen::VectorXd bad = y;
  bad(0) = std::nan("");
  CHECK_THROWS_AS(fit_forest(x, bad, cfg), Error);
  Eigen::VectorXd short_y = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(fit_forest(x, short_y, cfg), Error);

  ForestModel m = fit_forest(x, y, cfg);
  CHECK_THROWS_AS(predict(m, Eigen::MatrixXd::Zero(3, 4)), Error);
}

TEST_CASE("min_leaf is respected by every split") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  friedman_like(120, 5, 18, 0.5, x, y);
  ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.min_leaf = 10;
  cfg.seed = 19;
  ForestModel m = fit_forest(x, y, cfg);
  // Count rows reaching each leaf on the training data; every leaf of every
  // tree must hold at least min_leaf of its own bootstrap rows.
  for (int t = 0; t < 30; ++t) {
    const Tree& tree = m.trees[static_cast<std::size_t>(t)];
    std::vector<int> hits(tree.nodes.size(), 0);
    for (int r : bootstrap_indices(cfg.seed, t, 120)) {
      int node = 0;
      for (;;) {
        const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
        if (nd.feature < 0) break;
        node = x(r, nd.feature) <= nd.threshold ? nd.left : nd.right;
      }
      ++hits[static_cast<std::size_t>(node)];
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k)
      if (tree.nodes[k].feature < 0) CHECK(hits[k] >= cfg.min_leaf);
  }
}

TEST_CASE("max_depth caps the tree") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  friedman_like(200, 5, 20, 0.2, x, y);
  ForestConfig cfg;
  cfg.n_trees = 5;
  cfg.max_depth = 2;
  cfg.min_leaf = 1;
  cfg.seed = 21;
  ForestModel m = fit_forest(x, y, cfg);
  for (const Tree& tree : m.trees) {
    // Depth 2 allows at most 7 nodes (1 + 2 + 4).
    CHECK(tree.nodes.size() <= 7);
  }
}
