#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "yieldcast/error.hpp"
#include "yieldcast/matrix.hpp"
#include "yieldcast/parallel.hpp"
#include "yieldcast/rng.hpp"

namespace yieldcast {

/// A node of a regression tree stored in preorder. Leaves have feature < 0.
/// Internal nodes send x[feature] <= threshold left, everything else right.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean training target of the node
  std::size_t n_samples = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::size_t n_features = 0;

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [id, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      const auto& nd = nodes[static_cast<std::size_t>(id)];
      if (!nd.is_leaf()) {
        stack.emplace_back(nd.left, d + 1);
        stack.emplace_back(nd.right, d + 1);
      }
    }
    return best;
  }
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TreeConfig {
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 5;
  // 0 selects 2 * min_samples_leaf.
  std::size_t min_samples_split = 0;

  std::size_t resolved_min_split() const { return min_samples_split == 0 ? 2 * min_samples_leaf : min_samples_split; }
  void validate() const {
    if (max_depth < 1 || min_samples_leaf < 1 || resolved_min_split() < 1) {
      throw Error(ErrorKind::InvalidConfig, "tree max_depth, min_samples_leaf and min_samples_split must be >= 1");
    }
  }
  friend bool operator==(const TreeConfig&, const TreeConfig&) = default;
};

struct Split {
  double threshold = 0.0;
  double sse_reduction = 0.0;
};

namespace detail {

// Candidate thresholds are midpoints of consecutive distinct values; keep the
// midpoint strictly below the upper value so the <= rule routes it right.
inline double midpoint(double lo, double hi) {
  const double m = 0.5 * (lo + hi);
  return (m >= hi || m < lo) ? lo : m;
}

struct SortedCell {
  double x;
  double c;  // target centered on the node mean
  bool operator<(const SortedCell& o) const { return x < o.x || (x == o.x && c < o.c); }
};

/// Scans cells sorted by x. The SSE reduction of a split is
/// sL^2/nL + sR^2/nR - s^2/n over centered targets.
inline std::optional<Split> scan_sorted(std::span<const SortedCell> cells, std::size_t min_leaf) {
  const std::size_t n = cells.size();
  if (n < 2) return std::nullopt;
  double total = 0.0;
  for (const auto& c : cells) total += c.c;
  const double base = total * total / static_cast<double>(n);
  std::optional<Split> best;
  double left = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    left += cells[k].c;
    if (cells[k].x == cells[k + 1].x) continue;
    const std::size_t nl = k + 1;
    const std::size_t nr = n - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    const double right = total - left;
    const double red = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - base;
    if (red > 0.0 && (!best || red > best->sse_reduction)) best = Split{midpoint(cells[k].x, cells[k + 1].x), red};
  }
  return best;
}

inline bool is_pure(std::span<const double> y, std::span<const std::size_t> idx) {
  for (auto i : idx) {
    if (y[i] != y[idx.front()]) return false;
  }
  return true;
}

}  // namespace detail

/// Best SSE-reducing threshold for one feature, or nothing when no split
/// with both children >= min_samples_leaf reduces SSE. Ties go to the
/// smallest threshold.
inline std::optional<Split> best_split(std::span<const double> x_col, std::span<const double> y,
                                       std::size_t min_samples_leaf) {
  if (x_col.size() != y.size()) throw Error(ErrorKind::ShapeError, "best_split: x and y lengths differ");
  if (y.empty()) return std::nullopt;
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (detail::is_pure(y, idx)) return std::nullopt;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<detail::SortedCell> cells(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) cells[i] = {x_col[i], y[i] - mean};
  std::sort(cells.begin(), cells.end());
  return detail::scan_sorted(cells, std::max<std::size_t>(1, min_samples_leaf));
}

/// Per-split feature subsampling. Candidates are visited in a fresh random
/// order at every split; features that are constant within the node are
/// skipped without counting, and the search stops after
/// `features_per_split` non-constant features have been scanned.
struct FeatureSampler {
  std::size_t features_per_split;
  Rng rng;

  std::vector<std::size_t> order(std::size_t p) {
    std::vector<std::size_t> all(p);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < p; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(p - i));
      std::swap(all[i], all[j]);
    }
    return all;
  }
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const TreeConfig& cfg, FeatureSampler* sampler)
      : x_(x), y_(y), cfg_(cfg), sampler_(sampler), min_split_(cfg.resolved_min_split()) {}

  Tree build(std::vector<std::size_t> indices) {
    tree_.n_features = x_.cols();
    grow(std::move(indices), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> idx, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (auto i : idx) sum += y_[i];
    const double mean = sum / static_cast<double>(idx.size());
    tree_.nodes[static_cast<std::size_t>(id)].value = mean;
    tree_.nodes[static_cast<std::size_t>(id)].n_samples = idx.size();

    if (depth >= cfg_.max_depth || idx.size() < min_split_ || detail::is_pure(y_, idx)) return id;

    std::vector<std::size_t> features;
    if (sampler_) {
      features = sampler_->order(x_.cols());
    } else {
      features.resize(x_.cols());
      std::iota(features.begin(), features.end(), std::size_t{0});
    }
    const std::size_t budget = sampler_ ? sampler_->features_per_split : features.size();
    std::optional<Split> best;
    int best_feature = -1;
    std::size_t scanned = 0;
    cells_.resize(idx.size());
    for (std::size_t pos = 0; pos < features.size() && scanned < budget; ++pos) {
      const auto j = features[pos];
      if (sampler_ && is_constant(j, idx)) continue;
      ++scanned;
      for (std::size_t k = 0; k < idx.size(); ++k) cells_[k] = {x_(idx[k], j), y_[idx[k]] - mean};
      std::sort(cells_.begin(), cells_.end());
      auto s = scan_sorted(cells_, cfg_.min_samples_leaf);
      if (s && (!best || s->sse_reduction > best->sse_reduction ||
                (s->sse_reduction == best->sse_reduction && static_cast<int>(j) < best_feature))) {
        best = s;
        best_feature = static_cast<int>(j);
      }
    }
    if (!best) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto i : idx) {
      (x_(i, static_cast<std::size_t>(best_feature)) <= best->threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best->threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  bool is_constant(std::size_t j, const std::vector<std::size_t>& idx) const {
    const double first = x_(idx.front(), j);
    for (auto i : idx) {
      if (x_(i, j) != first) return false;
    }
    return true;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const TreeConfig& cfg_;
  FeatureSampler* sampler_;
  std::size_t min_split_;
  std::vector<SortedCell> cells_;
  Tree tree_;
};

inline void check_tree_inputs(const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) throw Error(ErrorKind::ShapeError, "x rows and y length differ");
  if (x.rows() == 0) throw Error(ErrorKind::EmptyInput, "tree fit needs at least one row");
  if (!x.all_finite() || !all_finite(y)) throw Error(ErrorKind::InvalidData, "non-finite value in training data");
}

}  // namespace detail

/// Greedy CART regression tree on the rows listed in `rows` (duplicates
/// allowed, as produced by bootstrap resampling).
inline Tree fit_cart_rows(const Matrix& x, std::span<const double> y, std::vector<std::size_t> rows,
                          const TreeConfig& cfg, FeatureSampler* sampler = nullptr) {
  cfg.validate();
  detail::check_tree_inputs(x, y);
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "tree fit needs at least one row");
  return detail::TreeBuilder(x, y, cfg, sampler).build(std::move(rows));
}

inline Tree fit_cart(const Matrix& x, std::span<const double> y, const TreeConfig& cfg,
                     FeatureSampler* sampler = nullptr) {
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_cart_rows(x, y, std::move(rows), cfg, sampler);
}

inline double predict_tree(const Tree& t, std::span<const double> row) {
  if (row.size() < t.n_features) {
    throw Error(ErrorKind::IndexError,
                "row has " + std::to_string(row.size()) + " features, tree expects " + std::to_string(t.n_features));
  }
  std::size_t id = 0;
  for (;;) {
    const auto& nd = t.nodes[id];
    if (nd.is_leaf()) return nd.value;
    id = static_cast<std::size_t>(row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
  }
}

inline std::vector<double> predict_tree(const Tree& t, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_tree(t, x.row(i));
  return out;
}

// ---------------------------------------------------------------- forest

struct ForestConfig {
  std::size_t n_trees = 100;
  // 0 selects max(1, floor(p / 3)).
  std::size_t features_per_split = 0;
  bool bootstrap = true;
  TreeConfig tree{32, 5, 0};
  std::uint64_t seed = 0;

  std::size_t resolved_features(std::size_t p) const {
    return features_per_split == 0 ? std::max<std::size_t>(1, p / 3) : features_per_split;
  }
  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

struct Forest {
  std::vector<Tree> trees;
  std::size_t n_features = 0;
  friend bool operator==(const Forest&, const Forest&) = default;
};

/// Bagged CART ensemble. Tree t draws its bootstrap sample and split
/// features from a stream seeded by derive_seed(seed, t), so trees can be
/// grown in any order or in parallel with identical results.
inline Forest fit_forest(const Matrix& x, std::span<const double> y, const ForestConfig& cfg) {
  detail::check_tree_inputs(x, y);
  cfg.tree.validate();
  if (x.rows() < 2) throw Error(ErrorKind::EmptyInput, "forest fit needs at least 2 rows");
  if (cfg.n_trees == 0) throw Error(ErrorKind::InvalidConfig, "forest needs at least one tree");
  const std::size_t p = x.cols();
  const std::size_t m = cfg.resolved_features(p);
  if (m < 1 || m > p) throw Error(ErrorKind::InvalidConfig, "features_per_split must lie in [1, p]");

  Forest forest;
  forest.n_features = p;
  forest.trees.resize(cfg.n_trees);
  const std::size_t n = x.rows();
  parallel_for(cfg.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<std::size_t> rows(n);
    if (cfg.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.uniform_index(n));
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    if (m == p) {
      forest.trees[t] = fit_cart_rows(x, y, std::move(rows), cfg.tree);
    } else {
      FeatureSampler sampler{m, Rng(rng.next())};
      forest.trees[t] = fit_cart_rows(x, y, std::move(rows), cfg.tree, &sampler);
    }
  });
  return forest;
}

inline double predict_forest(const Forest& f, std::span<const double> row) {
  if (f.trees.empty()) throw Error(ErrorKind::InvalidData, "forest has no trees");
  double sum = 0.0;
  for (const auto& t : f.trees) sum += predict_tree(t, row);
  return sum / static_cast<double>(f.trees.size());
}

inline std::vector<double> predict_forest(const Forest& f, const Matrix& x) {
  std::vector<double> out(x.rows());
  parallel_for(x.rows(), [&](std::size_t i) { out[i] = predict_forest(f, x.row(i)); });
  return out;
}

// ---------------------------------------------------------------- boosting

struct GbmConfig {
  std::size_t n_stages = 100;
  double learning_rate = 0.1;
  TreeConfig tree{3, 5, 0};
  std::uint64_t seed = 0;

  void validate() const {
    if (n_stages == 0) throw Error(ErrorKind::InvalidConfig, "GBM needs at least one stage");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw Error(ErrorKind::InvalidConfig, "GBM learning_rate must lie in (0, 1]");
    tree.validate();
  }
  friend bool operator==(const GbmConfig&, const GbmConfig&) = default;
};

/// prediction = init_value + learning_rate * sum of stage tree outputs.
struct GbmModel {
  double init_value = 0.0;
  std::vector<Tree> stages;
  double learning_rate = 0.1;
  std::size_t n_features = 0;
  // Training MSE after each stage (fit diagnostics, not persisted).
  std::vector<double> stage_train_mse;

  friend bool operator==(const GbmModel& a, const GbmModel& b) {
    return a.init_value == b.init_value && a.stages == b.stages && a.learning_rate == b.learning_rate &&
           a.n_features == b.n_features;
  }
};

inline double predict_gbm(const GbmModel& m, std::span<const double> row) {
  if (m.stages.empty()) throw Error(ErrorKind::InvalidData, "GBM model has no stages");
  double sum = 0.0;
  for (const auto& t : m.stages) sum += predict_tree(t, row);
  return m.init_value + m.learning_rate * sum;
}

inline std::vector<double> predict_gbm(const GbmModel& m, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_gbm(m, x.row(i));
  return out;
}

/// Squared-loss gradient boosting: each stage fits a CART to the residuals
/// of the current ensemble.
inline GbmModel fit_gbm(const Matrix& x, std::span<const double> y, const GbmConfig& cfg) {
  cfg.validate();
  detail::check_tree_inputs(x, y);
  if (x.rows() < 2) throw Error(ErrorKind::EmptyInput, "GBM fit needs at least 2 rows");
  const std::size_t n = x.rows();
  GbmModel m;
  m.learning_rate = cfg.learning_rate;
  m.n_features = x.cols();
  m.init_value = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> stage_sum(n, 0.0);
  std::vector<double> residual(n);
  for (std::size_t s = 0; s < cfg.n_stages; ++s) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - (m.init_value + m.learning_rate * stage_sum[i]);
    m.stages.push_back(fit_cart(x, residual, cfg.tree));
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      stage_sum[i] += predict_tree(m.stages.back(), x.row(i));
      const double e = y[i] - (m.init_value + m.learning_rate * stage_sum[i]);
      sse += e * e;
    }
    m.stage_train_mse.push_back(sse / static_cast<double>(n));
  }
  return m;
}

}  // namespace yieldcast
