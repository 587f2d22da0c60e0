#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "promisetune/space.hpp"

namespace promisetune {

/// A single predicate on a root-to-leaf path of a regression tree.
struct Predicate {
  enum class Op { less_than, not_less_than, equals, not_equals };
  std::size_t option = 0;
  Op op = Op::less_than;
  double threshold = 0.0;  ///< numeric ops
  int value = 0;           ///< equality ops

  bool operator==(const Predicate&) const = default;
};

using RawPath = std::vector<Predicate>;

/// Constraint on one option. Integer options use a half-open interval
/// [lo, hi) with integer bounds (infinite when open); binary and enumerated
/// options use the sorted set of admissible values.
struct Constraint {
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::size_t option = 0;
  bool interval = true;
  double lo = -kInf;
  double hi = kInf;
  std::vector<int> allowed;

  bool admits(int value) const;
  bool operator==(const Constraint&) const = default;
  auto operator<=>(const Constraint&) const = default;
};

/// Conjunction of per-option constraints, sorted by option index with at most
/// one constraint per option. Equality ignores provenance.
struct Rule {
  std::vector<Constraint> constraints;
  int provenance = 0;  ///< tuning iteration that learned the rule

  bool empty() const { return constraints.empty(); }
  const Constraint* find(std::size_t option) const;
  bool operator==(const Rule& other) const {
    return constraints == other.constraints;
  }
};

using RuleSet = std::vector<Rule>;

/// Samples × rules fit matrix with the aligned performance column.
class FeaturizedSet {
 public:
  FeaturizedSet(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool at(std::size_t row, std::size_t col) const {
    return cells_[row * cols_ + col] != 0;
  }
  void set(std::size_t row, std::size_t col, bool v) {
    cells_[row * cols_ + col] = v ? 1 : 0;
  }
  std::vector<double>& performance() { return performance_; }
  const std::vector<double>& performance() const { return performance_; }
  std::vector<double> column(std::size_t col) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> cells_;
  std::vector<double> performance_;
};

/// Intersects the predicates of a path per option. Throws SchemaError for an
/// unknown option and EmptyRegionError for a contradictory path.
Rule canonicalize(const RawPath& path, const ConfigSpace& space);

/// Re-canonicalizes an existing rule (identity on canonical rules).
Rule canonicalize(const Rule& rule, const ConfigSpace& space);

/// Predicate form of a rule; canonicalize(to_path(r)) == r.
RawPath to_path(const Rule& rule, const ConfigSpace& space);

RuleSet dedupe(std::span<const Rule> rules);

bool fits(const Configuration& config, const Rule& rule);

/// Builds the fit matrix over the given samples. Throws EmptyFeaturesError
/// when `rules` is empty.
FeaturizedSet featurize(std::span<const Sample> samples,
                        std::span<const Rule> rules);

/// Values of option `i` admitted by `rule` within the space's domain.
std::vector<int> admissible_values(const ConfigSpace& space, const Rule& rule,
                                   std::size_t option);

bool satisfiable(const ConfigSpace& space, const Rule& rule);

/// Compact text such as "<BZip2==1, 5<=BlockSize<10>".
std::string to_string(const Rule& rule, const ConfigSpace& space);

}  // namespace promisetune
