#include "fedmol/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "fedmol/rng.hpp"

namespace fedmol {

namespace {

double gini_sum(const std::vector<double>& counts, double n) {
  // n * Gini = n - Σ c² / n
  if (n <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return n - sq / n;
}

struct TreeBuilder {
  const Matrix& x;
  std::span<const int> y;
  int n_classes;
  int mtry;
  int max_depth;
  int min_leaf;
  Rng rng;
  RandomForest::Tree tree;
  std::vector<double> importance;

  int build(std::vector<std::size_t>& idx, int depth) {
    const int node_id = static_cast<int>(tree.size());
    tree.emplace_back();
    std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
    for (auto i : idx) counts[static_cast<std::size_t>(y[i])] += 1.0;
    tree[static_cast<std::size_t>(node_id)].majority =
        static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());

    const auto n = static_cast<double>(idx.size());
    const double parent = gini_sum(counts, n);
    if (parent <= 0.0 || idx.size() < 2 * static_cast<std::size_t>(min_leaf) ||
        (max_depth > 0 && depth >= max_depth))
      return node_id;

    std::vector<int> features(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);

    int best_feature = -1;
    double best_gain = 0.0, best_threshold = 0.0;
    int evaluated = 0;
    std::vector<std::size_t> order = idx;
    std::vector<double> left(static_cast<std::size_t>(n_classes));
    for (int f : features) {
      if (evaluated >= mtry && best_feature >= 0) break;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
      });
      const double lo = x(static_cast<Eigen::Index>(order.front()), f);
      const double hi = x(static_cast<Eigen::Index>(order.back()), f);
      if (lo == hi) continue;  // constant in this node: not counted
      ++evaluated;
      std::fill(left.begin(), left.end(), 0.0);
      std::vector<double> right = counts;
      for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
        const auto c = static_cast<std::size_t>(y[order[pos]]);
        left[c] += 1.0;
        right[c] -= 1.0;
        const double v = x(static_cast<Eigen::Index>(order[pos]), f);
        const double next = x(static_cast<Eigen::Index>(order[pos + 1]), f);
        if (v == next) continue;
        const double nl = static_cast<double>(pos + 1);
        const double nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double gain = parent - gini_sum(left, nl) - gini_sum(right, nr);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = f;
          best_threshold = v + (next - v) / 2.0;
        }
      }
    }
    if (best_feature < 0) return node_id;

    importance[static_cast<std::size_t>(best_feature)] += best_gain;
    std::vector<std::size_t> l, r;
    for (auto i : idx)
      (x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? l : r).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int left_id = build(l, depth + 1);
    const int right_id = build(r, depth + 1);
    auto& node = tree[static_cast<std::size_t>(node_id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left_id;
    node.right = right_id;
    return node_id;
  }
};

}  // namespace

void RandomForest::fit(const Matrix& x, std::span<const int> y, const RandomForestConfig& cfg) {
  if (cfg.n_trees < 1) throw std::invalid_argument("random forest: n_trees must be >= 1");
  if (cfg.min_samples_leaf < 1) throw std::invalid_argument("random forest: min_samples_leaf must be >= 1");
  if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty())
    throw std::invalid_argument("random forest: design matrix and labels disagree");
  if (x.cols() == 0) throw std::invalid_argument("random forest: no feature columns");
  if (*std::min_element(y.begin(), y.end()) < 0)
    throw std::invalid_argument("random forest: labels must be non-negative");

  n_classes_ = *std::max_element(y.begin(), y.end()) + 1;
  const int n_features = static_cast<int>(x.cols());
  const int mtry = cfg.features_per_split > 0
                       ? std::min(cfg.features_per_split, n_features)
                       : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_features)))));

  auto grow = [&](int t) {
    TreeBuilder b{x, y, n_classes_, mtry, cfg.max_depth, cfg.min_samples_leaf,
                  Rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(t)})), {},
                  std::vector<double>(static_cast<std::size_t>(n_features), 0.0)};
    std::uniform_int_distribution<std::size_t> pick(0, y.size() - 1);
    std::vector<std::size_t> sample(y.size());
    for (auto& s : sample) s = pick(b.rng);
    b.build(sample, 0);
    return std::make_pair(std::move(b.tree), std::move(b.importance));
  };

  std::vector<std::pair<Tree, std::vector<double>>> grown(static_cast<std::size_t>(cfg.n_trees));
  const unsigned workers = cfg.parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
  if (workers <= 1) {
    for (int t = 0; t < cfg.n_trees; ++t) grown[static_cast<std::size_t>(t)] = grow(t);
  } else {
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < workers; ++w)
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (int t = static_cast<int>(w); t < cfg.n_trees; t += static_cast<int>(workers))
          grown[static_cast<std::size_t>(t)] = grow(t);
      }));
    for (auto& j : jobs) j.get();
  }

  trees_.clear();
  importances_.assign(static_cast<std::size_t>(n_features), 0.0);
  std::size_t contributing = 0;
  for (auto& [tree, imp] : grown) {
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total > 0.0) {
      for (std::size_t f = 0; f < imp.size(); ++f) importances_[f] += imp[f] / total;
      ++contributing;
    }
    trees_.push_back(std::move(tree));
  }
  if (contributing > 0) {
    const double total = std::accumulate(importances_.begin(), importances_.end(), 0.0);
    for (auto& v : importances_) v /= total;
  }
}

std::vector<int> RandomForest::predict(const Matrix& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  std::vector<int> votes(static_cast<std::size_t>(n_classes_));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& tree : trees_) {
      int node = 0;
      while (tree[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& n = tree[static_cast<std::size_t>(node)];
        node = x(i, n.feature) <= n.threshold ? n.left : n.right;
      }
      ++votes[static_cast<std::size_t>(tree[static_cast<std::size_t>(node)].majority)];
    }
    out[static_cast<std::size_t>(i)] =
        static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

}  // namespace fedmol
