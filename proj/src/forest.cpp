#include "promisetune/forest.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace promisetune {

double RegressionTree::predict(const Configuration& c) const {
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    const int v = c.values[static_cast<std::size_t>(n.option)];
    const bool go_left = n.numeric ? v < n.threshold : v == n.value;
    node = static_cast<std::size_t>(go_left ? n.left : n.right);
  }
  return nodes[node].prediction;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(),
                    [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> depth_of(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth_of[i]);
    if (!nodes[i].is_leaf()) {
      depth_of[static_cast<std::size_t>(nodes[i].left)] = depth_of[i] + 1;
      depth_of[static_cast<std::size_t>(nodes[i].right)] = depth_of[i] + 1;
    }
  }
  return deepest;
}

RegressionForest::RegressionForest(std::vector<RegressionTree> trees,
                                   ForestParams params)
    : trees_(std::move(trees)), params_(params) {}

Prediction RegressionForest::predict(const Configuration& c) const {
  Prediction out;
  if (trees_.empty()) return out;
  double sum = 0.0;
  double sum_sq = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& tree : trees_) {
    const double y = tree.predict(c);
    sum += y;
    sum_sq += y * y;
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  const double n = static_cast<double>(trees_.size());
  out.mean = std::clamp(sum / n, lo, hi);
  if (hi > lo) out.stddev = std::sqrt(std::max(0.0, sum_sq / n - out.mean * out.mean));
  return out;
}

std::size_t RegressionForest::leaf_count() const {
  std::size_t total = 0;
  for (const auto& tree : trees_) total += tree.leaf_count();
  return total;
}

namespace {

struct Split {
  int option = -1;
  bool numeric = true;
  double threshold = 0.0;
  int value = 0;
  double gain = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const ConfigSpace& space, std::span<const Sample> samples,
             std::size_t min_leaf)
      : space_(space), samples_(samples), min_leaf_(std::max<std::size_t>(1, min_leaf)) {}

  RegressionTree grow(std::vector<std::size_t> rows) {
    RegressionTree tree;
    tree.nodes.emplace_back();
    struct Pending {
      std::size_t node;
      std::vector<std::size_t> rows;
    };
    std::vector<Pending> stack;
    stack.push_back({0, std::move(rows)});
    while (!stack.empty()) {
      Pending job = std::move(stack.back());
      stack.pop_back();
      TreeNode& node = tree.nodes[job.node];
      node.sample_count = job.rows.size();
      node.prediction = mean_of(job.rows);

      const Split split = best_split(job.rows);
      if (split.option < 0) {
        assert(job.node == 0 || job.rows.size() >= min_leaf_);
        continue;
      }
      std::vector<std::size_t> left_rows;
      std::vector<std::size_t> right_rows;
      for (std::size_t r : job.rows) {
        const int v = value(r, static_cast<std::size_t>(split.option));
        const bool left = split.numeric ? v < split.threshold : v == split.value;
        (left ? left_rows : right_rows).push_back(r);
      }
      const int left_index = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& parent = tree.nodes[job.node];
      parent.option = split.option;
      parent.numeric = split.numeric;
      parent.threshold = split.threshold;
      parent.value = split.value;
      parent.left = left_index;
      parent.right = left_index + 1;
      // Right pushed first so the left subtree is expanded first.
      stack.push_back({static_cast<std::size_t>(left_index + 1), std::move(right_rows)});
      stack.push_back({static_cast<std::size_t>(left_index), std::move(left_rows)});
    }
    return tree;
  }

 private:
  int value(std::size_t row, std::size_t option) const {
    return samples_[row].config.values[option];
  }
  double target(std::size_t row) const { return samples_[row].performance; }

  double mean_of(const std::vector<std::size_t>& rows) const {
    double sum = 0.0;
    for (std::size_t r : rows) sum += target(r);
    return sum / static_cast<double>(rows.size());
  }

  Split best_split(const std::vector<std::size_t>& rows) const {
    Split best;
    const std::size_t n = rows.size();
    if (n < 2 * min_leaf_) return best;

    double sum = 0.0;
    double lo = target(rows.front());
    double hi = lo;
    for (std::size_t r : rows) {
      sum += target(r);
      lo = std::min(lo, target(r));
      hi = std::max(hi, target(r));
    }
    if (hi <= lo) return best;
    double sse = 0.0;
    const double mean = sum / static_cast<double>(n);
    for (std::size_t r : rows) sse += (target(r) - mean) * (target(r) - mean);
    const double parent_term = sum * sum / static_cast<double>(n);
    const double min_gain = 1e-12 * std::max(1.0, sse);

    std::vector<std::pair<int, double>> column(n);
    for (std::size_t opt = 0; opt < space_.size(); ++opt) {
      for (std::size_t i = 0; i < n; ++i) {
        column[i] = {value(rows[i], opt), target(rows[i])};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;

      if (space_.option(opt).is_numeric()) {
        double left_sum = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
          left_sum += column[k - 1].second;
          if (column[k - 1].first == column[k].first) continue;
          if (k < min_leaf_ || n - k < min_leaf_) continue;
          const double right_sum = sum - left_sum;
          const double gain = left_sum * left_sum / static_cast<double>(k) +
                              right_sum * right_sum / static_cast<double>(n - k) -
                              parent_term;
          if (gain > min_gain && gain > best.gain) {
            best = {static_cast<int>(opt), true,
                    0.5 * (column[k - 1].first + column[k].first), 0, gain};
          }
        }
      } else {
        std::size_t start = 0;
        while (start < n) {
          std::size_t end = start;
          double group_sum = 0.0;
          while (end < n && column[end].first == column[start].first) {
            group_sum += column[end].second;
            ++end;
          }
          const std::size_t k = end - start;
          if (k >= min_leaf_ && n - k >= min_leaf_) {
            const double rest = sum - group_sum;
            const double gain = group_sum * group_sum / static_cast<double>(k) +
                                rest * rest / static_cast<double>(n - k) -
                                parent_term;
            if (gain > min_gain && gain > best.gain) {
              best = {static_cast<int>(opt), false, 0.0, column[start].first, gain};
            }
          }
          start = end;
        }
      }
    }
    return best;
  }

  const ConfigSpace& space_;
  std::span<const Sample> samples_;
  std::size_t min_leaf_;
};

}  // namespace

RegressionTree grow_tree(const ConfigSpace& space,
                         std::span<const Sample> samples,
                         std::vector<std::size_t> rows, std::size_t min_leaf) {
  return TreeGrower(space, samples, min_leaf).grow(std::move(rows));
}

RegressionForest train_forest(const ConfigSpace& space,
                              std::span<const Sample> samples,
                              const ForestParams& params) {
  std::vector<Sample> usable;
  usable.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.failed && std::isfinite(s.performance)) usable.push_back(s);
  }
  if (usable.size() < 2) {
    throw InsufficientDataError("forest training needs at least two samples");
  }
  if (params.tree_count == 0) throw InsufficientDataError("tree_count must be positive");

  std::vector<RegressionTree> trees(params.tree_count);
  parallel_for(params.tree_count, params.threads, [&](std::size_t t) {
    std::vector<std::size_t> rows(usable.size());
    if (params.bootstrap) {
      Rng rng(derive_seed(params.seed, t));
      std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
      for (auto& r : rows) r = pick(rng);
      std::sort(rows.begin(), rows.end());
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    trees[t] = grow_tree(space, usable, std::move(rows), params.min_leaf);
  });
  return RegressionForest(std::move(trees), params);
}

std::vector<RawPath> extract_paths(const RegressionForest& forest) {
  std::vector<RawPath> paths;
  for (const auto& tree : forest.trees()) {
    struct Frame {
      std::size_t node;
      RawPath path;
    };
    std::vector<Frame> stack;
    stack.push_back({0, {}});
    while (!stack.empty()) {
      Frame frame = std::move(stack.back());
      stack.pop_back();
      const TreeNode& n = tree.nodes[frame.node];
      if (n.is_leaf()) {
        paths.push_back(std::move(frame.path));
        continue;
      }
      const auto option = static_cast<std::size_t>(n.option);
      Predicate holds{option,
                      n.numeric ? Predicate::Op::less_than : Predicate::Op::equals,
                      n.threshold, n.value};
      Predicate fails{option,
                      n.numeric ? Predicate::Op::not_less_than
                                : Predicate::Op::not_equals,
                      n.threshold, n.value};
      RawPath right = frame.path;
      right.push_back(fails);
      frame.path.push_back(holds);
      stack.push_back({static_cast<std::size_t>(n.right), std::move(right)});
      stack.push_back({static_cast<std::size_t>(n.left), std::move(frame.path)});
    }
  }
  return paths;
}

}  // namespace promisetune
