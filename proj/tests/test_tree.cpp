#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "yieldcast/tree.hpp"

using namespace yieldcast;

namespace {

void expect_same_tree(const Tree& t, const std::vector<oracle::Node>& ref) {
  ASSERT_EQ(t.nodes.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto& a = t.nodes[i];
    const auto& b = ref[i];
    EXPECT_EQ(a.feature, b.feature) << "node " << i;
    EXPECT_EQ(a.left, b.left) << "node " << i;
    EXPECT_EQ(a.right, b.right) << "node " << i;
    EXPECT_EQ(a.n_samples, b.n) << "node " << i;
    if (!a.is_leaf()) {
      EXPECT_EQ(a.threshold, b.threshold) << "node " << i;
    }
    EXPECT_NEAR(a.value, b.value, 1e-12 * std::max(1.0, std::fabs(b.value))) << "node " << i;
  }
}

Tree leaf_tree(double v, std::size_t p) {
  Tree t;
  t.n_features = p;
  t.nodes.push_back({-1, 0, -1, -1, v, 1});
  return t;
}

Tree stump(int feature, double threshold, double lo, double hi, std::size_t p) {
  Tree t;
  t.n_features = p;
  t.nodes = {{feature, threshold, 1, 2, 0.5 * (lo + hi), 2}, {-1, 0, -1, -1, lo, 1}, {-1, 0, -1, -1, hi, 1}};
  return t;
}

}  // namespace

TEST(BestSplit, FourPointFixture) {
  const auto s = best_split(std::vector<double>{1, 2, 3, 4}, std::vector<double>{0, 0, 10, 10}, 1);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->threshold, 2.5);
  EXPECT_NEAR(s->sse_reduction, 100.0, 1e-12);
}

TEST(BestSplit, ConstantTargetHasNoSplit) {
  EXPECT_FALSE(best_split(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}, 1));
}

TEST(BestSplit, ConstantFeatureHasNoSplit) {
  EXPECT_FALSE(best_split(std::vector<double>{1, 1, 1}, std::vector<double>{4, 5, 6}, 1));
}

TEST(BestSplit, RespectsMinLeaf) {
  const auto s = best_split(std::vector<double>{1, 2, 3, 4, 5, 6}, std::vector<double>{100, 0, 0, 0, 0, 0}, 2);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->threshold, 2.5);
}

TEST(BestSplit, MatchesBruteForce) {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<std::size_t> size(2, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(gen);
    auto x = synth::uniform_vector(gen, n);
    // Repeated feature values exercise the duplicate-skipping path.
    for (auto& v : x) v = std::round(v * 6) / 6;
    const auto y = synth::uniform_vector(gen, n, -5, 5);
    oracle::Rows rows;
    for (double v : x) rows.push_back({v});
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const std::size_t leaf = 1 + trial % 3;
    const auto ref = oracle::brute_force_split(rows, y, idx, leaf);
    const auto got = best_split(x, y, leaf);
    ASSERT_EQ(got.has_value(), ref.has_value()) << "trial " << trial;
    if (!ref) continue;
    EXPECT_EQ(got->threshold, ref->threshold) << "trial " << trial;
    EXPECT_NEAR(got->sse_reduction, ref->reduction, 1e-9 * std::max(1.0, ref->reduction));
  }
}

TEST(Cart, ConstantTargetIsSingleLeaf) {
  const auto t = fit_cart(Matrix::from_rows({{1}, {2}, {3}}), std::vector<double>{5, 5, 5}, TreeConfig{});
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.nodes[0].value, 5.0);
}

TEST(Cart, XorFixtureDepthTwo) {
  // Targets 0, 1, 1, 3 on the corners of the unit square: the root splits x0,
  // then each child splits x1.
  const auto x = Matrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const std::vector<double> y{0, 1, 1, 3};
  const auto t = fit_cart(x, y, TreeConfig{2, 1, 2});
  ASSERT_EQ(t.nodes.size(), 7u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_EQ(t.nodes[0].threshold, 0.5);
  EXPECT_EQ(t.nodes[1].feature, 1);
  EXPECT_EQ(t.nodes[4].feature, 1);
  EXPECT_EQ(t.nodes[2].value, 0.0);
  EXPECT_EQ(t.nodes[3].value, 1.0);
  EXPECT_EQ(t.nodes[5].value, 1.0);
  EXPECT_EQ(t.nodes[6].value, 3.0);
  const auto ref = oracle::greedy_tree({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, y, 2, 1, 2);
  expect_same_tree(t, ref);
}

TEST(Cart, DepthOneStumpOnSplitFixture) {
  const auto t = fit_cart(Matrix::from_rows({{1}, {2}, {3}, {4}}), std::vector<double>{0, 0, 10, 10}, TreeConfig{1, 1, 2});
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].threshold, 2.5);
  EXPECT_EQ(t.nodes[1].value, 0.0);
  EXPECT_EQ(t.nodes[2].value, 10.0);
}

TEST(Cart, MatchesGreedyOracleNodeForNode) {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<std::size_t> n_dist(2, 30), p_dist(1, 3), d_dist(1, 2), leaf_dist(1, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = n_dist(gen), p = p_dist(gen), depth = d_dist(gen), leaf = leaf_dist(gen);
    auto rows = synth::uniform_rows(gen, n, p);
    const auto y = synth::uniform_vector(gen, n, 0, 100);
    const auto t = fit_cart(Matrix::from_rows(rows), y, TreeConfig{depth, leaf, 0});
    expect_same_tree(t, oracle::greedy_tree(rows, y, depth, leaf, 2 * leaf));
  }
}

TEST(Cart, DepthLimitIsRespected) {
  const auto p = synth::friedman1(1, 300);
  const auto t = fit_cart(p.matrix(), p.y, TreeConfig{4, 1, 2});
  EXPECT_LE(t.depth(), 4u);
  EXPECT_GE(t.depth(), 1u);
}

TEST(PredictTree, LeafReturnsValue) {
  const auto t = leaf_tree(7.5, 2);
  EXPECT_EQ(predict_tree(t, std::vector<double>{1e9, -1e9}), 7.5);
}

TEST(PredictTree, ThresholdGoesLeft) {
  const auto t = stump(0, 2.5, -1, 1, 1);
  EXPECT_EQ(predict_tree(t, std::vector<double>{2.5}), -1.0);
  EXPECT_EQ(predict_tree(t, std::vector<double>{2.5000001}), 1.0);
}

TEST(PredictTree, ShortRowIsIndexError) {
  try {
    predict_tree(stump(1, 0, 0, 1, 2), std::vector<double>{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IndexError);
  }
}

TEST(PredictTree, UnprunedTreeReproducesTrainingTargets) {
  std::mt19937_64 gen(5);
  synth::Problem p;
  p.x = synth::uniform_rows(gen, 80, 3);
  p.y = synth::uniform_vector(gen, 80);
  const auto t = fit_cart(p.matrix(), p.y, TreeConfig{1000, 1, 2});
  EXPECT_EQ(predict_tree(t, p.matrix()), p.y);
}

TEST(Forest, SingleTreeWithoutBootstrapEqualsCart) {
  const auto p = synth::friedman1(4, 200);
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.bootstrap = false;
  cfg.features_per_split = 10;
  cfg.tree = TreeConfig{8, 3, 0};
  const auto f = fit_forest(p.matrix(), p.y, cfg);
  const auto t = fit_cart(p.matrix(), p.y, cfg.tree);
  EXPECT_EQ(f.trees.front(), t);
  EXPECT_EQ(predict_forest(f, p.matrix()), predict_tree(t, p.matrix()));
}

TEST(Forest, SameSeedIsIdentical) {
  const auto p = synth::friedman1(5, 150);
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 3;
  EXPECT_EQ(fit_forest(p.matrix(), p.y, cfg), fit_forest(p.matrix(), p.y, cfg));
  auto other = cfg;
  other.seed = 4;
  EXPECT_NE(fit_forest(p.matrix(), p.y, cfg), fit_forest(p.matrix(), p.y, other));
}

TEST(Forest, MeanOfTwoTrees) {
  Forest f;
  f.n_features = 1;
  f.trees = {leaf_tree(2, 1), leaf_tree(4, 1)};
  EXPECT_EQ(predict_forest(f, std::vector<double>{0}), 3.0);
}

TEST(Forest, PredictionWithinMemberRange) {
  const auto p = synth::friedman1(6, 200);
  ForestConfig cfg;
  cfg.seed = 1;
  const auto f = fit_forest(p.matrix(), p.y, cfg);
  std::mt19937_64 gen(1);
  for (const auto& q : synth::uniform_rows(gen, 50, 10, 0, 1)) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& t : f.trees) {
      lo = std::min(lo, predict_tree(t, q));
      hi = std::max(hi, predict_tree(t, q));
    }
    const double v = predict_forest(f, q);
    EXPECT_GE(v, lo - 1e-9);
    EXPECT_LE(v, hi + 1e-9);
  }
}

TEST(Forest, FeatureCountOutOfRangeIsInvalidConfig) {
  const auto p = synth::friedman1(6, 20);
  ForestConfig cfg;
  cfg.features_per_split = 11;
  EXPECT_THROW(fit_forest(p.matrix(), p.y, cfg), Error);
}

TEST(Gbm, OneFullStageWithUnitRateInterpolates) {
  std::mt19937_64 gen(2);
  synth::Problem p;
  p.x = synth::uniform_rows(gen, 40, 2);
  p.y = synth::uniform_vector(gen, 40);
  GbmConfig cfg{1, 1.0, TreeConfig{1000, 1, 2}, 0};
  const auto m = fit_gbm(p.matrix(), p.y, cfg);
  const auto pred = predict_gbm(m, p.matrix());
  for (std::size_t i = 0; i < p.y.size(); ++i) EXPECT_NEAR(pred[i], p.y[i], 1e-12);
}

TEST(Gbm, ZeroStagesIsInvalid) {
  const auto p = synth::friedman1(1, 20);
  EXPECT_THROW(fit_gbm(p.matrix(), p.y, GbmConfig{0, 0.1, TreeConfig{3, 1, 2}, 0}), Error);
}

TEST(Gbm, OneStageFormula) {
  const auto p = synth::friedman1(2, 50);
  const auto m = fit_gbm(p.matrix(), p.y, GbmConfig{1, 0.1, TreeConfig{2, 3, 0}, 0});
  const double mean = oracle::mean(p.y);
  EXPECT_NEAR(m.init_value, mean, 1e-12);
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    EXPECT_EQ(predict_gbm(m, p.matrix().row(i)), m.init_value + 0.1 * predict_tree(m.stages[0], p.matrix().row(i)));
  }
}

TEST(Gbm, ZeroTreeStageGivesInitValue) {
  GbmModel m;
  m.init_value = 12.5;
  m.n_features = 1;
  m.stages = {leaf_tree(0.0, 1)};
  EXPECT_EQ(predict_gbm(m, std::vector<double>{3}), 12.5);
}

TEST(Gbm, HandBuiltTwoStageModel) {
  GbmModel m;
  m.init_value = 10;
  m.learning_rate = 0.5;
  m.n_features = 1;
  m.stages = {stump(0, 0.0, -2, 4, 1), leaf_tree(6, 1)};
  EXPECT_EQ(predict_gbm(m, std::vector<double>{-1}), 10 + 0.5 * (-2 + 6));
  EXPECT_EQ(predict_gbm(m, std::vector<double>{1}), 10 + 0.5 * (4 + 6));
  std::swap(m.stages[0], m.stages[1]);
  EXPECT_EQ(predict_gbm(m, std::vector<double>{1}), 10 + 0.5 * (4 + 6));
}

TEST(Gbm, TrainingMseNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto p = synth::friedman1(seed, 200);
    const auto m = fit_gbm(p.matrix(), p.y, GbmConfig{});
    double prev = oracle::mse(p.y, std::vector<double>(p.y.size(), m.init_value));
    for (double v : m.stage_train_mse) {
      EXPECT_LE(v, prev);
      prev = v;
    }
    EXPECT_DOUBLE_EQ(m.stage_train_mse.back(), oracle::mse(p.y, predict_gbm(m, p.matrix())));
  }
}

TEST(Forest, ConstantFeaturesDoNotEndTheSearch) {
  // Only column 0 varies; a one-feature-per-split forest must still find it.
  const auto prob = synth::friedman1(21, 120);
  synth::Rows rows;
  for (const auto& r : prob.x) {
    std::vector<double> row(10, 1.0);
    row[0] = r[0];
    rows.push_back(row);
  }
  const auto x = Matrix::from_rows(rows);
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.bootstrap = false;
  cfg.features_per_split = 1;
  cfg.tree = TreeConfig{};
  EXPECT_EQ(fit_forest(x, prob.y, cfg).trees.front(), fit_cart(x, prob.y, TreeConfig{}));
}
