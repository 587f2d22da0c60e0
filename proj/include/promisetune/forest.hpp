#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "promisetune/rules.hpp"
#include "promisetune/space.hpp"

namespace promisetune {

/// Flat CART node. Internal nodes route a configuration left when the
/// predicate holds: `value < threshold` for integer options, `value == label`
/// for binary and enumerated ones.
struct TreeNode {
  int option = -1;  ///< -1 marks a leaf
  bool numeric = true;
  double threshold = 0.0;
  int value = 0;
  int left = -1;
  int right = -1;
  double prediction = 0.0;
  std::size_t sample_count = 0;

  bool is_leaf() const { return option < 0; }
};

class RegressionTree {
 public:
  std::vector<TreeNode> nodes;  ///< nodes[0] is the root

  double predict(const Configuration& c) const;
  std::size_t leaf_count() const;
  std::size_t depth() const;
};

struct ForestParams {
  std::size_t min_leaf = 10;  ///< l: minimum samples per leaf
  std::size_t tree_count = 100;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  unsigned threads = 1;
};

struct Prediction {
  double mean = 0.0;
  double stddev = 0.0;
};

class RegressionForest {
 public:
  RegressionForest(std::vector<RegressionTree> trees, ForestParams params);

  std::span<const RegressionTree> trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  Prediction predict(const Configuration& c) const;
  std::size_t leaf_count() const;

 private:
  std::vector<RegressionTree> trees_;
  ForestParams params_;
};

/// Bagged CART regression. Failed (non-finite) samples are ignored. Throws
/// InsufficientDataError with fewer than two usable samples.
RegressionForest train_forest(const ConfigSpace& space,
                              std::span<const Sample> samples,
                              const ForestParams& params);

/// Grows one tree on the given rows (indices into `samples`, repeats allowed).
RegressionTree grow_tree(const ConfigSpace& space,
                         std::span<const Sample> samples,
                         std::vector<std::size_t> rows, std::size_t min_leaf);

/// One root-to-leaf predicate sequence per leaf, trees in order, left
/// subtrees first.
std::vector<RawPath> extract_paths(const RegressionForest& forest);

}  // namespace promisetune
