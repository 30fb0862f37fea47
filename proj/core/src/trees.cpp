#include <algorithm>
#include <cmath>
#include <numeric>

#include "pattc/learn/learner.hpp"
#include "pattc/util/error.hpp"
#include "pattc/util/rng.hpp"

namespace pattc {

namespace {

constexpr int kHistBins = 64;
constexpr double kEps = 1e-12;

struct TreeNode {
  int feature = -1;      // -1 marks a leaf
  double threshold = 0;  // x <= threshold goes left
  int left = -1, right = -1;
  double value = 0;
};
using Tree = std::vector<TreeNode>;

double tree_eval(const Tree& tree, const Eigen::MatrixXd& X, Eigen::Index row) {
  int node = 0;
  while (tree[node].feature >= 0)
    node = X(row, tree[node].feature) <= tree[node].threshold ? tree[node].left
                                                              : tree[node].right;
  return tree[node].value;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Gradient boosting: histogram-binned depth-limited trees, no subsampling.

struct Binner {
  // edges[f] holds ascending upper edges; code b means x <= edges[b] (last
  // bin catches everything above the final interior edge).
  std::vector<std::vector<double>> edges;
  std::vector<std::vector<std::uint16_t>> codes;  // codes[f][row]

  Binner(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows(), p = X.cols();
    edges.resize(p);
    codes.resize(p);
    std::vector<double> vals(n);
    for (Eigen::Index f = 0; f < p; ++f) {
      for (Eigen::Index i = 0; i < n; ++i) vals[i] = X(i, f);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      auto& e = edges[f];
      if (static_cast<int>(vals.size()) <= kHistBins) {
        e = vals;
      } else {
        for (int b = 1; b < kHistBins; ++b)
          e.push_back(vals[b * vals.size() / kHistBins]);
        e.push_back(vals.back());
        e.erase(std::unique(e.begin(), e.end()), e.end());
      }
      auto& c = codes[f];
      c.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        auto it = std::lower_bound(e.begin(), e.end(), X(i, f));
        c[i] = static_cast<std::uint16_t>(
            std::min<std::ptrdiff_t>(it - e.begin(), e.size() - 1));
      }
    }
  }
};

struct BoostTarget {
  const Eigen::VectorXd& grad;  // per-row regression target
  const Eigen::VectorXd& hess;  // per-row curvature (ones for gaussian)
  const Eigen::VectorXd& w;
};

// Builds one depth-limited tree on the binned features; returns node list and
// fills `leaf_of` with the leaf index of every training row.
Tree build_boost_tree(const Binner& bins, const BoostTarget& t, int max_depth,
                      std::vector<int>& leaf_of) {
  const std::size_t n = t.grad.size();
  const std::size_t p = bins.codes.size();
  Tree tree(1);
  std::vector<std::vector<int>> node_rows(1);
  node_rows[0].resize(n);
  std::iota(node_rows[0].begin(), node_rows[0].end(), 0);
  std::vector<int> frontier{0};

  for (int depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    std::vector<int> next;
    for (int node : frontier) {
      auto& rows = node_rows[node];
      if (rows.size() < 2) continue;
      double tot_w = 0, tot_g = 0;
      for (int i : rows) {
        tot_w += t.w(i);
        tot_g += t.w(i) * t.grad(i);
      }
      if (tot_w <= kEps) continue;
      const double base = tot_g * tot_g / tot_w;

      int best_f = -1, best_bin = -1;
      double best_gain = kEps;
      std::vector<double> hw, hg;
      for (std::size_t f = 0; f < p; ++f) {
        const auto& code = bins.codes[f];
        const std::size_t nb = bins.edges[f].size();
        if (nb < 2) continue;
        hw.assign(nb, 0.0);
        hg.assign(nb, 0.0);
        for (int i : rows) {
          hw[code[i]] += t.w(i);
          hg[code[i]] += t.w(i) * t.grad(i);
        }
        double lw = 0, lg = 0;
        for (std::size_t b = 0; b + 1 < nb; ++b) {
          lw += hw[b];
          lg += hg[b];
          const double rw = tot_w - lw, rg = tot_g - lg;
          if (lw <= kEps || rw <= kEps) continue;
          const double gain = lg * lg / lw + rg * rg / rw - base;
          if (gain > best_gain) {  // strict: first (feature, bin) wins ties
            best_gain = gain;
            best_f = static_cast<int>(f);
            best_bin = static_cast<int>(b);
          }
        }
      }
      if (best_f < 0) continue;

      const int li = static_cast<int>(tree.size());
      tree.push_back({});
      const int ri = static_cast<int>(tree.size());
      tree.push_back({});
      tree[node].feature = best_f;
      tree[node].threshold = bins.edges[best_f][best_bin];
      tree[node].left = li;
      tree[node].right = ri;
      std::vector<int> moved = std::move(rows);  // resize may reallocate node_rows
      node_rows.resize(tree.size());
      const auto& code = bins.codes[best_f];
      for (int i : moved) node_rows[code[i] <= best_bin ? li : ri].push_back(i);
      next.push_back(li);
      next.push_back(ri);
    }
    frontier = std::move(next);
  }

  // Newton leaf values: sum(w*g) / sum(w*h)
  leaf_of.assign(n, 0);
  for (std::size_t node = 0; node < tree.size(); ++node) {
    if (tree[node].feature >= 0) continue;
    double sg = 0, sh = 0;
    for (int i : node_rows[node]) {
      sg += t.w(i) * t.grad(i);
      sh += t.w(i) * t.hess(i);
      leaf_of[i] = static_cast<int>(node);
    }
    tree[node].value = sh > kEps ? std::clamp(sg / sh, -8.0, 8.0) : 0.0;
  }
  return tree;
}

class GbtModel final : public FittedLearner {
 public:
  GbtModel(LearnerSpec spec, int n_features, double init, std::vector<Tree> trees)
      : FittedLearner(std::move(spec), n_features), init_(init), trees_(std::move(trees)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    check_query(X);
    Eigen::VectorXd score = Eigen::VectorXd::Constant(X.rows(), init_);
    for (const auto& tree : trees_)
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        score(i) += spec_.learning_rate * tree_eval(tree, X, i);
    if (spec_.family == Family::binomial)
      return score.unaryExpr([](double s) { return sigmoid(s); });
    return score;
  }

 private:
  double init_;
  std::vector<Tree> trees_;
};

// ---------------------------------------------------------------------------
// Random forest: exact-split trees on bootstrap resamples.

struct RfContext {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const Eigen::VectorXd& w;
  int m;  // candidate predictors per split
  int min_leaf;
};

void split_rf_node(const RfContext& ctx, Tree& tree, int node,
                   std::vector<int>& rows, Rng& rng) {
  double sw = 0, sy = 0;
  for (int i : rows) {
    sw += ctx.w(i);
    sy += ctx.w(i) * ctx.y(i);
  }
  tree[node].value = sw > kEps ? sy / sw : 0.0;
  if (static_cast<int>(rows.size()) < 2 * ctx.min_leaf) return;

  // sample m candidate features, evaluated in ascending index order
  const int p = static_cast<int>(ctx.X.cols());
  std::vector<int> feats(p);
  std::iota(feats.begin(), feats.end(), 0);
  for (int k = 0; k < ctx.m; ++k) {
    std::uniform_int_distribution<int> pick(k, p - 1);
    std::swap(feats[k], feats[pick(rng)]);
  }
  feats.resize(ctx.m);
  std::sort(feats.begin(), feats.end());

  int best_f = -1;
  double best_thresh = 0, best_gain = kEps;
  std::vector<int> order;
  for (int f : feats) {
    order = rows;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return ctx.X(a, f) < ctx.X(b, f) || (ctx.X(a, f) == ctx.X(b, f) && a < b);
    });
    double lw = 0, ly = 0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const int i = order[k];
      lw += ctx.w(i);
      ly += ctx.w(i) * ctx.y(i);
      if (ctx.X(order[k + 1], f) == ctx.X(i, f)) continue;
      if (static_cast<int>(k) + 1 < ctx.min_leaf ||
          static_cast<int>(order.size() - k - 1) < ctx.min_leaf)
        continue;
      const double rw = sw - lw, ry = sy - ly;
      if (lw <= kEps || rw <= kEps) continue;
      const double gain = ly * ly / lw + ry * ry / rw - sy * sy / sw;
      if (gain > best_gain) {
        best_gain = gain;
        best_f = f;
        best_thresh = 0.5 * (ctx.X(i, f) + ctx.X(order[k + 1], f));
      }
    }
  }
  if (best_f < 0) return;

  std::vector<int> left, right;
  for (int i : rows)
    (ctx.X(i, best_f) <= best_thresh ? left : right).push_back(i);
  if (left.empty() || right.empty()) return;

  const int li = static_cast<int>(tree.size());
  tree.push_back({});
  const int ri = static_cast<int>(tree.size());
  tree.push_back({});
  tree[node].feature = best_f;
  tree[node].threshold = best_thresh;
  tree[node].left = li;
  tree[node].right = ri;
  rows.clear();
  rows.shrink_to_fit();
  split_rf_node(ctx, tree, li, left, rng);
  split_rf_node(ctx, tree, ri, right, rng);
}

class RandomForestModel final : public FittedLearner {
 public:
  RandomForestModel(LearnerSpec spec, int n_features, std::vector<Tree> trees)
      : FittedLearner(std::move(spec), n_features), trees_(std::move(trees)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    check_query(X);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (const auto& tree : trees_)
      for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) += tree_eval(tree, X, i);
    out /= static_cast<double>(trees_.size());
    if (spec_.family == Family::binomial)
      out = out.cwiseMax(0.0).cwiseMin(1.0);
    return out;
  }

 private:
  std::vector<Tree> trees_;
};

}  // namespace

LearnerPtr fit_gbt(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                   std::uint64_t /*seed*/) {
  const Eigen::Index n = X.rows();
  const Binner bins(X);

  double init;
  if (spec.family == Family::binomial) {
    const double pbar = std::clamp(w.dot(y) / w.sum(), 1e-6, 1.0 - 1e-6);
    init = std::log(pbar / (1.0 - pbar));
  } else {
    init = w.dot(y) / w.sum();
  }

  Eigen::VectorXd score = Eigen::VectorXd::Constant(n, init);
  Eigen::VectorXd grad(n), hess = Eigen::VectorXd::Ones(n);
  std::vector<Tree> trees;
  trees.reserve(spec.n_trees);
  std::vector<int> leaf_of;
  for (int t = 0; t < spec.n_trees; ++t) {
    if (spec.family == Family::binomial) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p = sigmoid(score(i));
        grad(i) = y(i) - p;
        hess(i) = std::max(p * (1.0 - p), 1e-6);
      }
    } else {
      grad = y - score;
    }
    Tree tree = build_boost_tree(bins, {grad, hess, w}, spec.max_depth, leaf_of);
    for (Eigen::Index i = 0; i < n; ++i)
      score(i) += spec.learning_rate * tree[leaf_of[i]].value;
    trees.push_back(std::move(tree));
  }
  return std::make_shared<GbtModel>(spec, static_cast<int>(X.cols()), init,
                                    std::move(trees));
}

LearnerPtr fit_random_forest(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  if (n < 1) throw DataError("random forest requires at least one row");
  std::vector<Tree> trees;
  trees.reserve(spec.n_trees);
  RfContext ctx{X, y, w, spec.n_predictors, std::max(spec.min_leaf, 1)};
  for (int t = 0; t < spec.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> rows;
    rows.reserve(n);
    if (spec.bootstrap_rows) {
      std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
      for (Eigen::Index i = 0; i < n; ++i) rows.push_back(static_cast<int>(pick(rng)));
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    }
    Tree tree(1);
    split_rf_node(ctx, tree, 0, rows, rng);
    trees.push_back(std::move(tree));
  }
  return std::make_shared<RandomForestModel>(spec, static_cast<int>(X.cols()),
                                             std::move(trees));
}

}  // namespace pattc
