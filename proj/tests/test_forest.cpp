#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "promisetune/forest.hpp"

using namespace promisetune;

namespace {

std::vector<Sample> random_samples(const ConfigSpace& space, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Configuration c = random_configuration(space, rng);
    double y = noise(rng);
    for (std::size_t k = 0; k < c.values.size(); ++k) y += (k + 1) * c.values[k];
    out.push_back({c, y, false});
  }
  return out;
}

double sse(const std::vector<double>& ys) {
  if (ys.empty()) return 0.0;
  double m = 0.0;
  for (double y : ys) m += y;
  m /= static_cast<double>(ys.size());
  double s = 0.0;
  for (double y : ys) s += (y - m) * (y - m);
  return s;
}

// Exhaustive search over every threshold of every numeric option.
double best_reduction(const ConfigSpace& space, const std::vector<Sample>& samples,
                      std::size_t min_leaf) {
  std::vector<double> all;
  for (const auto& s : samples) all.push_back(s.performance);
  const double parent = sse(all);
  double best = 0.0;
  for (std::size_t opt = 0; opt < space.size(); ++opt) {
    const auto& def = space.option(opt);
    for (int t = def.domain_min(); t < def.domain_max(); ++t) {
      std::vector<double> left;
      std::vector<double> right;
      for (const auto& s : samples) {
        (s.config.values[opt] <= t ? left : right).push_back(s.performance);
      }
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      best = std::max(best, parent - sse(left) - sse(right));
    }
  }
  return best;
}

double root_reduction(const RegressionTree& tree, const std::vector<Sample>& samples) {
  const TreeNode& root = tree.nodes[0];
  std::vector<double> all;
  std::vector<double> left;
  std::vector<double> right;
  for (const auto& s : samples) {
    all.push_back(s.performance);
    const int v = s.config.values[static_cast<std::size_t>(root.option)];
    (v < root.threshold ? left : right).push_back(s.performance);
  }
  return sse(all) - sse(left) - sse(right);
}

void check_leaves(const RegressionTree& tree, std::size_t min_leaf) {
  for (const auto& n : tree.nodes) {
    if (!n.is_leaf()) continue;
    EXPECT_GE(n.sample_count, 1U);
    if (tree.nodes.size() > 1) {
      EXPECT_GE(n.sample_count, min_leaf);
    }
  }
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

}  // namespace

TEST(Forest, ConstantTargetsGiveSingleLeaves) {
  const ConfigSpace space({OptionDef::integer("x", 0, 20), OptionDef::binary("b")});
  auto samples = random_samples(space, 40, 1);
  for (auto& s : samples) s.performance = 7.0;
  const auto forest = train_forest(space, samples, {.min_leaf = 1, .tree_count = 20, .seed = 3});
  for (const auto& tree : forest.trees()) {
    ASSERT_EQ(tree.nodes.size(), 1U);
    EXPECT_DOUBLE_EQ(tree.nodes[0].prediction, 7.0);
  }
  const auto p = forest.predict(samples[0].config);
  EXPECT_DOUBLE_EQ(p.mean, 7.0);
  EXPECT_DOUBLE_EQ(p.stddev, 0.0);
}

TEST(Forest, TenSamplesWithLeafTenIsSingleLeaf) {
  const ConfigSpace space({OptionDef::integer("x", 0, 100)});
  const auto samples = random_samples(space, 10, 2);
  const auto forest = train_forest(space, samples, {.min_leaf = 10, .tree_count = 10, .seed = 1});
  for (const auto& tree : forest.trees()) EXPECT_EQ(tree.leaf_count(), 1U);
  EXPECT_EQ(forest.leaf_count(), 10U);
}

TEST(Forest, TwoValueStump) {
  const ConfigSpace space({OptionDef::integer("x", 0, 1)});
  std::vector<Sample> samples;
  for (int i = 0; i < 5; ++i) {
    samples.push_back({{{0}}, 0.0, false});
    samples.push_back({{{1}}, 10.0, false});
  }
  EXPECT_DOUBLE_EQ(best_reduction(space, samples, 1), 250.0);
  const auto forest = train_forest(
      space, samples, {.min_leaf = 1, .tree_count = 1, .seed = 0, .bootstrap = false});
  const auto& tree = forest.trees()[0];
  ASSERT_EQ(tree.nodes.size(), 3U);
  EXPECT_EQ(tree.nodes[0].option, 0);
  EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, 0.5);
  EXPECT_DOUBLE_EQ(tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)].prediction, 0.0);
  EXPECT_DOUBLE_EQ(tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)].prediction, 10.0);
  EXPECT_DOUBLE_EQ(root_reduction(tree, samples), 250.0);
}

TEST(Forest, RootSplitMatchesExhaustiveSearch) {
  const ConfigSpace space({OptionDef::integer("x", 0, 7), OptionDef::integer("y", -3, 3),
                           OptionDef::integer("z", 0, 2)});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto samples = random_samples(space, 30, seed);
    for (std::size_t l : {1U, 3U, 8U}) {
      const auto tree = grow_tree(space, samples, all_rows(samples.size()), l);
      const double oracle = best_reduction(space, samples, l);
      if (tree.nodes[0].is_leaf()) {
        EXPECT_NEAR(oracle, 0.0, 1e-9);
      } else {
        EXPECT_NEAR(root_reduction(tree, samples), oracle, 1e-6 * std::max(1.0, oracle));
      }
    }
  }
}

TEST(Forest, ThresholdsAreMidpointsOfObservedValues) {
  const ConfigSpace space({OptionDef::integer("x", 0, 100)});
  std::vector<Sample> samples;
  for (int v : {3, 3, 9, 9, 40, 40, 41, 41}) samples.push_back({{{v}}, v < 20 ? 1.0 : 5.0, false});
  const auto tree = grow_tree(space, samples, all_rows(samples.size()), 1);
  EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, 24.5);
}

TEST(Forest, EqualitySplitOnEnumerated) {
  const ConfigSpace space({OptionDef::enumerated("mode", {"a", "b", "c"})});
  std::vector<Sample> samples;
  for (int i = 0; i < 4; ++i) {
    samples.push_back({{{0}}, 5.0, false});
    samples.push_back({{{1}}, 1.0, false});
    samples.push_back({{{2}}, 5.0, false});
  }
  const auto tree = grow_tree(space, samples, all_rows(samples.size()), 1);
  ASSERT_FALSE(tree.nodes[0].is_leaf());
  EXPECT_FALSE(tree.nodes[0].numeric);
  EXPECT_EQ(tree.nodes[0].value, 1);
  EXPECT_EQ(tree.leaf_count(), 2U);
}

TEST(Forest, TooFewSamplesThrows) {
  const ConfigSpace space({OptionDef::integer("x", 0, 5)});
  const std::vector<Sample> one{{{{1}}, 1.0, false}};
  EXPECT_THROW(train_forest(space, one, {}), InsufficientDataError);
  const std::vector<Sample> failed{{{{1}}, 1.0, false},
                                   {{{2}}, std::numeric_limits<double>::infinity(), true}};
  EXPECT_THROW(train_forest(space, failed, {}), InsufficientDataError);
}

TEST(Predict, TwoTreeMeanAndSpread) {
  RegressionTree a;
  a.nodes.push_back({});
  a.nodes[0].prediction = 4.0;
  a.nodes[0].sample_count = 1;
  RegressionTree b = a;
  b.nodes[0].prediction = 6.0;
  const RegressionForest forest({a, b}, {});
  const auto p = forest.predict({{0}});
  EXPECT_DOUBLE_EQ(p.mean, 5.0);
  EXPECT_DOUBLE_EQ(p.stddev, 1.0);
}

TEST(Predict, SingleTreeHasNoSpread) {
  const ConfigSpace space({OptionDef::integer("x", 0, 30)});
  const auto samples = random_samples(space, 40, 4);
  const auto forest = train_forest(space, samples, {.min_leaf = 1, .tree_count = 1, .seed = 5});
  for (const auto& s : samples) EXPECT_EQ(forest.predict(s.config).stddev, 0.0);
}

TEST(Predict, WithinTrainingRange) {
  const ConfigSpace space({OptionDef::integer("x", 0, 30), OptionDef::binary("b"),
                           OptionDef::enumerated("e", {"p", "q", "r"})});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto samples = random_samples(space, 50, seed);
    double lo = samples[0].performance;
    double hi = lo;
    for (const auto& s : samples) {
      lo = std::min(lo, s.performance);
      hi = std::max(hi, s.performance);
    }
    const auto forest = train_forest(space, samples, {.min_leaf = 2, .tree_count = 30, .seed = seed});
    Rng rng(seed);
    for (int i = 0; i < 50; ++i) {
      const auto p = forest.predict(random_configuration(space, rng));
      EXPECT_GE(p.mean, lo);
      EXPECT_LE(p.mean, hi);
      EXPECT_TRUE(std::isfinite(p.stddev));
      EXPECT_GE(p.stddev, 0.0);
    }
  }
}

TEST(Forest, LeafMinimumHolds) {
  const ConfigSpace space({OptionDef::integer("x", 0, 50), OptionDef::binary("b"),
                           OptionDef::enumerated("e", {"p", "q", "r"})});
  for (std::size_t l : {1U, 2U, 5U, 10U}) {
    const auto samples = random_samples(space, 80, l);
    const auto forest = train_forest(space, samples, {.min_leaf = l, .tree_count = 20, .seed = l});
    for (const auto& tree : forest.trees()) check_leaves(tree, l);
  }
}

TEST(Forest, LargerLeafGivesShorterPaths) {
  const ConfigSpace space({OptionDef::integer("x", 0, 50), OptionDef::integer("y", 0, 50)});
  const auto samples = random_samples(space, 100, 8);
  auto mean_depth = [&](std::size_t l) {
    const auto forest = train_forest(space, samples, {.min_leaf = l, .tree_count = 20, .seed = 2});
    double total = 0.0;
    for (const auto& p : extract_paths(forest)) total += static_cast<double>(p.size());
    return total / static_cast<double>(forest.leaf_count());
  };
  EXPECT_GT(mean_depth(2), mean_depth(10));
  EXPECT_GT(mean_depth(10), mean_depth(40));
}

TEST(Forest, DeterministicAcrossThreadCounts) {
  const ConfigSpace space({OptionDef::integer("x", 0, 50), OptionDef::binary("b")});
  const auto samples = random_samples(space, 60, 9);
  const auto one = train_forest(space, samples, {.min_leaf = 2, .tree_count = 16, .seed = 4, .threads = 1});
  const auto four = train_forest(space, samples, {.min_leaf = 2, .tree_count = 16, .seed = 4, .threads = 4});
  const auto p1 = extract_paths(one);
  const auto p4 = extract_paths(four);
  EXPECT_EQ(p1, p4);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto c = random_configuration(space, rng);
    EXPECT_EQ(one.predict(c).mean, four.predict(c).mean);
    EXPECT_EQ(one.predict(c).stddev, four.predict(c).stddev);
  }
}

TEST(ExtractPaths, SingleLeafGivesEmptyPath) {
  const ConfigSpace space({OptionDef::integer("x", 0, 10)});
  const auto samples = random_samples(space, 5, 1);
  const auto forest = train_forest(space, samples, {.min_leaf = 10, .tree_count = 1});
  const auto paths = extract_paths(forest);
  ASSERT_EQ(paths.size(), 1U);
  EXPECT_TRUE(paths[0].empty());
}

TEST(ExtractPaths, Stump) {
  RegressionTree tree;
  tree.nodes.resize(3);
  tree.nodes[0] = {.option = 0, .numeric = true, .threshold = 5.0, .left = 1, .right = 2};
  const RegressionForest forest({tree}, {});
  const auto paths = extract_paths(forest);
  ASSERT_EQ(paths.size(), 2U);
  EXPECT_EQ(paths[0], (RawPath{{0, Predicate::Op::less_than, 5.0, 0}}));
  EXPECT_EQ(paths[1], (RawPath{{0, Predicate::Op::not_less_than, 5.0, 0}}));
}

TEST(ExtractPaths, DepthTwoHandTrace) {
  // x < 5 ? (y == 1 ? A : B) : C
  RegressionTree tree;
  tree.nodes.resize(5);
  tree.nodes[0] = {.option = 0, .numeric = true, .threshold = 5.0, .left = 1, .right = 2};
  tree.nodes[1] = {.option = 1, .numeric = false, .value = 1, .left = 3, .right = 4};
  const RegressionForest forest({tree}, {});
  const auto paths = extract_paths(forest);
  const RawPath a{{0, Predicate::Op::less_than, 5.0, 0}, {1, Predicate::Op::equals, 0.0, 1}};
  const RawPath b{{0, Predicate::Op::less_than, 5.0, 0}, {1, Predicate::Op::not_equals, 0.0, 1}};
  const RawPath c{{0, Predicate::Op::not_less_than, 5.0, 0}};
  EXPECT_EQ(paths, (std::vector<RawPath>{a, b, c}));
}

TEST(ExtractPaths, CountEqualsLeafCount) {
  const ConfigSpace space({OptionDef::integer("x", 0, 50), OptionDef::binary("b"),
                           OptionDef::enumerated("e", {"p", "q", "r"})});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto samples = random_samples(space, 40, seed);
    const auto forest = train_forest(space, samples, {.min_leaf = 1 + seed % 4, .tree_count = 10, .seed = seed});
    EXPECT_EQ(extract_paths(forest).size(), forest.leaf_count());
  }
}

TEST(ExtractPaths, PathRoutesItsTrainingRows) {
  // Every training row is routed to exactly one path whose predicates it satisfies.
  const ConfigSpace space({OptionDef::integer("x", 0, 20), OptionDef::enumerated("e", {"p", "q", "r"})});
  const auto samples = random_samples(space, 40, 3);
  const auto forest = train_forest(space, samples, {.min_leaf = 2, .tree_count = 1, .bootstrap = false});
  const auto paths = extract_paths(forest);
  auto holds = [](const Configuration& c, const Predicate& p) {
    const int v = c.values[p.option];
    switch (p.op) {
      case Predicate::Op::less_than: return v < p.threshold;
      case Predicate::Op::not_less_than: return v >= p.threshold;
      case Predicate::Op::equals: return v == p.value;
      case Predicate::Op::not_equals: return v != p.value;
    }
    return false;
  };
  for (const auto& s : samples) {
    int matches = 0;
    for (const auto& path : paths) {
      matches += std::all_of(path.begin(), path.end(),
                             [&](const Predicate& p) { return holds(s.config, p); });
    }
    EXPECT_EQ(matches, 1);
  }
}
