#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hetknock/dataset.hpp"

namespace hetknock {

// Regression random forest used to center the response before the variance
// statistics are formed. CART trees, exact greedy variance-reduction splits,
// bootstrap resampling, feature subsampling per node.

struct ForestConfig {
  int n_trees = 500;
  int mtry = 0;       // 0 resolves to ceil(p / 3)
  int min_leaf = 5;   // minimum rows per child
  int max_depth = 0;  // 0 means unlimited
  bool bootstrap = true;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
  std::vector<Tree> trees;
  double y_min = 0.0;  // prediction clamp range, from the training response
  double y_max = 0.0;
  int p = 0;
  ForestConfig cfg;
};

ForestModel fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const ForestConfig& cfg);

// Mean over trees, clamped to the training response range.
Eigen::VectorXd predict(const ForestModel& model, const Eigen::MatrixXd& x);

// y - prediction over the dataset rows.
Eigen::VectorXd residuals(const ForestModel& model, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y);

// Bootstrap rows for tree t are a pure function of (seed, t, n); exposed so
// out-of-bag membership can be replayed without storing it.
std::vector<int> bootstrap_indices(std::uint64_t seed, int tree_index, int n);

// Out-of-bag prediction per training row; NaN where a row was in-bag for
// every tree. Requires cfg.bootstrap.
Eigen::VectorXd oob_predictions(const ForestModel& model, const Eigen::MatrixXd& x);

int resolve_mtry(int mtry, int p);

}  // namespace hetknock
