#include <gtest/gtest.h>

#include <algorithm>

#include "promisetune/forest.hpp"
#include "promisetune/rules.hpp"

using namespace promisetune;

namespace {

using Op = Predicate::Op;

ConfigSpace sevenzip() {
  return ConfigSpace({OptionDef::binary("BZip2"), OptionDef::integer("BlockSize", 0, 30)});
}

bool holds(const Configuration& c, const Predicate& p) {
  const int v = c.values[p.option];
  switch (p.op) {
    case Op::less_than: return v < p.threshold;
    case Op::not_less_than: return v >= p.threshold;
    case Op::equals: return v == p.value;
    case Op::not_equals: return v != p.value;
  }
  return false;
}

bool path_holds(const Configuration& c, const RawPath& path) {
  return std::all_of(path.begin(), path.end(), [&](const Predicate& p) { return holds(c, p); });
}

// Random tree-like paths: thresholds at half-integers on integer options,
// equalities on categorical ones.
RawPath random_path(const ConfigSpace& space, Rng& rng, int max_len) {
  RawPath path;
  const int len = std::uniform_int_distribution<int>(0, max_len)(rng);
  for (int k = 0; k < len; ++k) {
    const std::size_t opt = std::uniform_int_distribution<std::size_t>(0, space.size() - 1)(rng);
    const auto& def = space.option(opt);
    const int v = std::uniform_int_distribution<int>(def.domain_min(), def.domain_max())(rng);
    if (def.is_numeric()) {
      path.push_back({opt, rng() % 2 ? Op::less_than : Op::not_less_than, v + 0.5, 0});
    } else {
      path.push_back({opt, rng() % 2 ? Op::equals : Op::not_equals, 0.0, v});
    }
  }
  return path;
}

ConfigSpace mixed_space() {
  return ConfigSpace({OptionDef::binary("a"), OptionDef::integer("x", -2, 9),
                      OptionDef::enumerated("e", {"p", "q", "r", "s"}),
                      OptionDef::integer("y", 0, 5), OptionDef::binary("b")});
}

}  // namespace

TEST(Canonicalize, MergesOverlappingRanges) {
  const auto space = sevenzip();
  const Rule merged = canonicalize(
      RawPath{{0, Op::equals, 0, 1}, {1, Op::less_than, 7, 0}, {1, Op::less_than, 5, 0}}, space);
  const Rule expected =
      canonicalize(RawPath{{0, Op::equals, 0, 1}, {1, Op::less_than, 5, 0}}, space);
  EXPECT_EQ(merged, expected);
  ASSERT_EQ(merged.constraints.size(), 2U);
  EXPECT_EQ(merged.constraints[0].allowed, std::vector<int>{1});
  EXPECT_TRUE(std::isinf(merged.constraints[1].lo));
  EXPECT_EQ(merged.constraints[1].hi, 5.0);
  EXPECT_EQ(to_string(merged, space), "<BZip2==1, BlockSize<5>");
}

TEST(Canonicalize, EmptyPathFitsEverything) {
  const auto space = sevenzip();
  const Rule r = canonicalize(RawPath{}, space);
  EXPECT_TRUE(r.empty());
  for (const auto& c : enumerate_space(space)) EXPECT_TRUE(fits(c, r));
}

TEST(Canonicalize, IntervalIntersection) {
  const ConfigSpace space({OptionDef::integer("x", 0, 20)});
  const Rule r = canonicalize(
      RawPath{{0, Op::not_less_than, 3, 0}, {0, Op::less_than, 10, 0}, {0, Op::not_less_than, 5, 0}},
      space);
  ASSERT_EQ(r.constraints.size(), 1U);
  EXPECT_EQ(r.constraints[0].lo, 5.0);
  EXPECT_EQ(r.constraints[0].hi, 10.0);
  EXPECT_EQ(admissible_values(space, r, 0), (std::vector<int>{5, 6, 7, 8, 9}));
}

TEST(Canonicalize, ErrorsOnUnknownOptionAndContradiction) {
  const auto space = sevenzip();
  EXPECT_THROW(canonicalize(RawPath{{5, Op::less_than, 1, 0}}, space), SchemaError);
  EXPECT_THROW(
      canonicalize(RawPath{{1, Op::less_than, 3, 0}, {1, Op::not_less_than, 8, 0}}, space),
      EmptyRegionError);
  EXPECT_THROW(canonicalize(RawPath{{0, Op::equals, 0, 1}, {0, Op::equals, 0, 0}}, space),
               EmptyRegionError);
}

TEST(Canonicalize, IdempotentOnRandomPaths) {
  const auto space = mixed_space();
  Rng rng(17);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const RawPath path = random_path(space, rng, 6);
    Rule r;
    try {
      r = canonicalize(path, space);
    } catch (const EmptyRegionError&) {
      continue;
    }
    ++checked;
    EXPECT_EQ(canonicalize(r, space), r);
    EXPECT_EQ(canonicalize(to_path(r, space), space), r);
  }
  EXPECT_GT(checked, 500);
}

TEST(Canonicalize, RegionMatchesPathSemanticsExhaustively) {
  const auto space = mixed_space();
  const auto universe = enumerate_space(space);
  ASSERT_LE(universe.size(), 4096U);
  Rng rng(23);
  for (int i = 0; i < 150; ++i) {
    const RawPath path = random_path(space, rng, 5);
    Rule r;
    try {
      r = canonicalize(path, space);
    } catch (const EmptyRegionError&) {
      EXPECT_TRUE(std::none_of(universe.begin(), universe.end(),
                               [&](const Configuration& c) { return path_holds(c, path); }));
      continue;
    }
    std::size_t count = 0;
    for (const auto& c : universe) {
      EXPECT_EQ(fits(c, r), path_holds(c, path));
      count += fits(c, r);
    }
    // The region is the product of the per-option admissible sets.
    std::size_t product = 1;
    for (std::size_t o = 0; o < space.size(); ++o) product *= admissible_values(space, r, o).size();
    EXPECT_EQ(count, product);
    EXPECT_TRUE(satisfiable(space, r));
  }
}

TEST(Canonicalize, AtMostOneConstraintPerOption) {
  const auto space = mixed_space();
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    try {
      const Rule r = canonicalize(random_path(space, rng, 8), space);
      for (std::size_t k = 1; k < r.constraints.size(); ++k) {
        EXPECT_LT(r.constraints[k - 1].option, r.constraints[k].option);
      }
    } catch (const EmptyRegionError&) {
    }
  }
}

TEST(Dedupe, RemovesStructuralDuplicates) {
  const ConfigSpace space({OptionDef::integer("x", 0, 20), OptionDef::binary("b")});
  const Rule r = canonicalize(RawPath{{0, Op::less_than, 5, 0}}, space);
  EXPECT_EQ(dedupe(std::vector<Rule>{r, r}), RuleSet{r});

  const Rule ab = canonicalize(RawPath{{0, Op::less_than, 5, 0}, {1, Op::equals, 0, 1}}, space);
  const Rule ba = canonicalize(RawPath{{1, Op::equals, 0, 1}, {0, Op::less_than, 5, 0}}, space);
  EXPECT_EQ(dedupe(std::vector<Rule>{ab, ba}).size(), 1U);

  Rule tagged = r;
  tagged.provenance = 9;
  const auto kept = dedupe(std::vector<Rule>{ab, tagged, r});
  ASSERT_EQ(kept.size(), 2U);
  EXPECT_EQ(kept[0], ab);
  EXPECT_EQ(kept[1].provenance, 9);
}

TEST(Dedupe, IdenticalTreesHalveRuleCount) {
  const ConfigSpace space({OptionDef::integer("x", 0, 30), OptionDef::binary("b")});
  Rng rng(2);
  std::vector<Sample> samples;
  for (int i = 0; i < 40; ++i) {
    const auto c = random_configuration(space, rng);
    samples.push_back({c, c.values[0] * 1.5 + 4.0 * c.values[1], false});
  }
  const auto forest = train_forest(space, samples,
                                   {.min_leaf = 3, .tree_count = 1, .bootstrap = false});
  const RegressionForest twin({forest.trees()[0], forest.trees()[0]}, {});
  auto rules_of = [&](const RegressionForest& f) {
    std::vector<Rule> rules;
    for (const auto& p : extract_paths(f)) rules.push_back(canonicalize(p, space));
    return rules;
  };
  const auto single = rules_of(forest);
  const auto doubled = rules_of(twin);
  ASSERT_GT(single.size(), 1U);
  EXPECT_EQ(doubled.size(), 2 * single.size());
  EXPECT_EQ(dedupe(doubled).size(), single.size());
}

TEST(Fits, WorkedExample) {
  const auto space = sevenzip();
  const Rule r1 = canonicalize(RawPath{{0, Op::equals, 0, 1}}, space);
  const Rule r2 = canonicalize(
      RawPath{{0, Op::equals, 0, 0}, {1, Op::not_less_than, 5, 0}, {1, Op::less_than, 10, 0}},
      space);
  const Configuration c{{0, 8}};
  EXPECT_FALSE(fits(c, r1));
  EXPECT_TRUE(fits(c, r2));
  EXPECT_TRUE(fits(c, Rule{}));
  EXPECT_FALSE(fits({{0, 10}}, r2));
  EXPECT_TRUE(fits({{0, 9}}, r2));
  EXPECT_TRUE(fits({{0, 5}}, r2));
  EXPECT_FALSE(fits({{0, 4}}, r2));
}

TEST(Featurize, WorkedExampleRow) {
  const auto space = sevenzip();
  const RuleSet rules{
      canonicalize(RawPath{{0, Op::equals, 0, 1}}, space),
      canonicalize(
          RawPath{{0, Op::equals, 0, 0}, {1, Op::not_less_than, 5, 0}, {1, Op::less_than, 10, 0}},
          space)};
  const std::vector<Sample> samples{{{{0, 8}}, 42.0, false}};
  const auto set = featurize(samples, rules);
  ASSERT_EQ(set.rows(), 1U);
  ASSERT_EQ(set.cols(), 2U);
  EXPECT_FALSE(set.at(0, 0));
  EXPECT_TRUE(set.at(0, 1));
  EXPECT_EQ(set.performance(), std::vector<double>{42.0});
}

TEST(Featurize, EmptyRuleIsAllOnes) {
  const auto space = sevenzip();
  std::vector<Sample> samples;
  for (const auto& c : enumerate_space(space)) samples.push_back({c, 1.0, false});
  const auto set = featurize(samples, RuleSet{Rule{}});
  for (std::size_t i = 0; i < set.rows(); ++i) EXPECT_TRUE(set.at(i, 0));
  EXPECT_EQ(set.column(0), std::vector<double>(set.rows(), 1.0));
}

TEST(Featurize, EmptyRuleSetThrows) {
  const std::vector<Sample> samples{{{{0, 8}}, 1.0, false}};
  EXPECT_THROW(featurize(samples, RuleSet{}), EmptyFeaturesError);
}

TEST(Featurize, MatchesBruteForce) {
  const auto space = mixed_space();
  Rng rng(31);
  for (int instance = 0; instance < 200; ++instance) {
    RuleSet rules;
    while (rules.size() < 3) {
      try {
        rules.push_back(canonicalize(random_path(space, rng, 4), space));
      } catch (const EmptyRegionError&) {
      }
    }
    std::vector<Sample> samples;
    for (int i = 0; i < 5; ++i) {
      samples.push_back({random_configuration(space, rng), static_cast<double>(i), false});
    }
    const auto set = featurize(samples, rules);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t k = 0; k < rules.size(); ++k) {
        EXPECT_EQ(set.at(i, k), fits(samples[i].config, rules[k]));
      }
      EXPECT_EQ(set.performance()[i], samples[i].performance);
    }
  }
}

TEST(Featurize, ConfigMayFitSeveralRules) {
  const ConfigSpace space({OptionDef::integer("x", 0, 20)});
  const RuleSet rules{canonicalize(RawPath{{0, Op::less_than, 10, 0}}, space),
                      canonicalize(RawPath{{0, Op::less_than, 5, 0}}, space)};
  const std::vector<Sample> samples{{{{3}}, 1.0, false}};
  const auto set = featurize(samples, rules);
  EXPECT_TRUE(set.at(0, 0));
  EXPECT_TRUE(set.at(0, 1));
}

TEST(RuleText, Formats) {
  const ConfigSpace space({OptionDef::binary("BZip2"), OptionDef::integer("BlockSize", 0, 30),
                          OptionDef::enumerated("mode", {"fast", "slow", "max"})});
  const Rule r = canonicalize(RawPath{{0, Op::equals, 0, 1},
                                      {1, Op::not_less_than, 5, 0},
                                      {1, Op::less_than, 10, 0},
                                      {2, Op::not_equals, 0, 1}},
                              space);
  const std::string text = to_string(r, space);
  EXPECT_NE(text.find("BZip2==1"), std::string::npos);
  EXPECT_NE(text.find("5<=BlockSize<10"), std::string::npos);
  EXPECT_NE(text.find("mode"), std::string::npos);
}
