#include "hetknock/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "hetknock/errors.hpp"
#include "hetknock/parallel.hpp"
#include "hetknock/rng.hpp"

namespace hetknock {

namespace {

struct NodeTask {
  int node = 0;
  int begin = 0;
  int end = 0;
  int depth = 0;
};

// Builds one CART regression tree over idx[begin, end); idx is partitioned in
// place as splits are applied. All randomness (feature subsampling) comes
// from the caller's rng in stack pop order, so the tree is a pure function of
// (x, y, initial idx, rng state).
class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestConfig& cfg,
              int mtry, Rng& rng)
      : x_(x), y_(y), cfg_(cfg), mtry_(mtry), rng_(rng) {
    feat_pool_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(feat_pool_.begin(), feat_pool_.end(), 0);
    buf_.resize(static_cast<std::size_t>(x.rows()));
  }

  Tree build(std::vector<int> idx) {
    idx_ = std::move(idx);
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<NodeTask> stack{{0, 0, static_cast<int>(idx_.size()), 0}};
    while (!stack.empty()) {
      NodeTask task = stack.back();
      stack.pop_back();
      process(tree, task, stack);
    }
    return tree;
  }

 private:
  void process(Tree& tree, const NodeTask& task, std::vector<NodeTask>& stack) {
    const int n_node = task.end - task.begin;
    double sum = 0.0, sumsq = 0.0;
    for (int i = task.begin; i < task.end; ++i) {
      const double v = y_(idx_[static_cast<std::size_t>(i)]);
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / n_node;
    const double sse = std::max(0.0, sumsq - sum * mean);

    auto make_leaf = [&] { tree.nodes[static_cast<std::size_t>(task.node)].value = mean; };

    const bool depth_capped = cfg_.max_depth > 0 && task.depth >= cfg_.max_depth;
    // Near-pure nodes stop splitting; the tolerance absorbs accumulation
    // error in sums of equal responses.
    const bool pure = sse <= 1e-12 * n_node * (1.0 + mean * mean);
    if (n_node < 2 * cfg_.min_leaf || depth_capped || pure) {
      make_leaf();
      return;
    }

    // Sample mtry features without replacement, examined in ascending order
    // so tie scores resolve to the lowest feature index.
    const int p = static_cast<int>(x_.cols());
    for (int k = 0; k < mtry_; ++k) {
      const int swap_with =
          k + static_cast<int>(rng_.bounded(static_cast<std::uint64_t>(p - k)));
      std::swap(feat_pool_[static_cast<std::size_t>(k)],
                feat_pool_[static_cast<std::size_t>(swap_with)]);
    }
    chosen_.assign(feat_pool_.begin(), feat_pool_.begin() + mtry_);
    std::sort(chosen_.begin(), chosen_.end());

    const double parent_score = sum * mean;  // sum^2 / n_node
    double best_score = parent_score;
    int best_feature = -1;
    double best_threshold = 0.0;
    int best_left = 0;

    for (const int f : chosen_) {
      for (int i = task.begin; i < task.end; ++i) {
        const int row = idx_[static_cast<std::size_t>(i)];
        buf_[static_cast<std::size_t>(i - task.begin)] = {x_(row, f), y_(row)};
      }
      auto first = buf_.begin();
      auto last = buf_.begin() + n_node;
      std::sort(first, last,
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (first->first == (last - 1)->first) continue;  // constant within node

      double left_sum = 0.0;
      for (int i = 1; i < n_node; ++i) {
        left_sum += buf_[static_cast<std::size_t>(i - 1)].second;
        if (buf_[static_cast<std::size_t>(i)].first ==
            buf_[static_cast<std::size_t>(i - 1)].first)
          continue;
        if (i < cfg_.min_leaf || n_node - i < cfg_.min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double score =
            left_sum * left_sum / i + right_sum * right_sum / (n_node - i);
        if (score > best_score) {
          const double lo = buf_[static_cast<std::size_t>(i - 1)].first;
          const double hi = buf_[static_cast<std::size_t>(i)].first;
          double thr = 0.5 * (lo + hi);
          if (!(thr < hi)) thr = lo;  // keep the partition exact under rounding
          best_score = score;
          best_feature = f;
          best_threshold = thr;
          best_left = i;
        }
      }
    }

    if (best_feature < 0) {
      make_leaf();
      return;
    }

    auto mid_it = std::partition(
        idx_.begin() + task.begin, idx_.begin() + task.end,
        [&](int row) { return x_(row, best_feature) <= best_threshold; });
    const int mid = static_cast<int>(mid_it - idx_.begin());
    // The threshold sits strictly between two observed values, so the
    // partition size matches the scan position exactly.
    if (mid - task.begin != best_left)
      fail(ErrorCode::BadArgument, "internal split inconsistency");

    const int left_node = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(task.node)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left_node;
    node.right = left_node + 1;
    stack.push_back({left_node + 1, mid, task.end, task.depth + 1});
    stack.push_back({left_node, task.begin, mid, task.depth + 1});
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const ForestConfig& cfg_;
  int mtry_;
  Rng& rng_;
  std::vector<int> idx_;
  std::vector<int> feat_pool_;
  std::vector<int> chosen_;
  std::vector<std::pair<double, double>> buf_;
};

double tree_predict(const Tree& tree, const Eigen::MatrixXd& x, Eigen::Index row) {
  int node = 0;
  for (;;) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
    if (nd.feature < 0) return nd.value;
    node = x(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
}

}  // namespace

int resolve_mtry(int mtry, int p) {
  if (mtry > 0) return std::min(mtry, p);
  return (p + 2) / 3;  // ceil(p / 3)
}

std::vector<int> bootstrap_indices(std::uint64_t seed, int tree_index, int n) {
  Rng rng = Rng::substream(seed, stream::kForest, static_cast<std::uint64_t>(tree_index));
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    rows[static_cast<std::size_t>(i)] =
        static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
  return rows;
}

ForestModel fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const ForestConfig& cfg) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  if (y.size() != x.rows()) fail(ErrorCode::ShapeMismatch, "response length != row count");
  if (p < 1) fail(ErrorCode::ShapeMismatch, "need at least 1 feature");
  if (cfg.n_trees < 1) fail(ErrorCode::BadArgument, "n_trees must be >= 1");
  if (cfg.min_leaf < 1) fail(ErrorCode::BadArgument, "min_leaf must be >= 1");
  if (n < 2 * cfg.min_leaf) fail(ErrorCode::TooFewRows, "need at least 2 * min_leaf rows");
  if (!x.allFinite() || !y.allFinite()) fail(ErrorCode::NonFiniteValue, "non-finite input");

  ForestModel model;
  model.cfg = cfg;
  model.p = p;
  model.y_min = y.minCoeff();
  model.y_max = y.maxCoeff();
  model.trees.resize(static_cast<std::size_t>(cfg.n_trees));

  const int mtry = resolve_mtry(cfg.mtry, p);
  parallel_for(cfg.n_trees, cfg.threads, [&](int t) {
    Rng rng = Rng::substream(cfg.seed, stream::kForest, static_cast<std::uint64_t>(t));
    std::vector<int> rows(static_cast<std::size_t>(n));
    if (cfg.bootstrap) {
      // Same draws as bootstrap_indices: the first n values of this stream.
      for (int i = 0; i < n; ++i)
        rows[static_cast<std::size_t>(i)] =
            static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder(x, y, cfg, mtry, rng);
    model.trees[static_cast<std::size_t>(t)] = builder.build(std::move(rows));
  });
  return model;
}

Eigen::VectorXd predict(const ForestModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.p) fail(ErrorCode::ShapeMismatch, "feature count != training");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double acc = 0.0;
    for (const Tree& tree : model.trees) acc += tree_predict(tree, x, i);
    out(i) = std::clamp(acc / static_cast<double>(model.trees.size()), model.y_min, model.y_max);
  }
  return out;
}

Eigen::VectorXd residuals(const ForestModel& model, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y) {
  if (y.size() != x.rows()) fail(ErrorCode::ShapeMismatch, "response length != row count");
  return y - predict(model, x);
}

Eigen::VectorXd oob_predictions(const ForestModel& model, const Eigen::MatrixXd& x) {
  if (!model.cfg.bootstrap)
    fail(ErrorCode::BadArgument, "out-of-bag requires bootstrap resampling");
  if (x.cols() != model.p) fail(ErrorCode::ShapeMismatch, "feature count != training");
  const int n = static_cast<int>(x.rows());
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(n);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(n);
  std::vector<char> in_bag(static_cast<std::size_t>(n));
  for (int t = 0; t < static_cast<int>(model.trees.size()); ++t) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (int r : bootstrap_indices(model.cfg.seed, t, n)) in_bag[static_cast<std::size_t>(r)] = 1;
    for (int i = 0; i < n; ++i) {
      if (in_bag[static_cast<std::size_t>(i)]) continue;
      sums(i) += tree_predict(model.trees[static_cast<std::size_t>(t)], x, i);
      ++counts(i);
    }
  }
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i)
    out(i) = counts(i) > 0 ? std::clamp(sums(i) / counts(i), model.y_min, model.y_max)
                           : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace hetknock
