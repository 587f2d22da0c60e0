#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "promisetune/common.hpp"

namespace promisetune {

enum class OptionKind { binary, integer, enumerated };

/// One tunable option. Binary options take values {0, 1}; integer options
/// take [lo, hi] inclusive; enumerated options take label indices.
struct OptionDef {
  std::string name;
  OptionKind kind = OptionKind::binary;
  int lo = 0;
  int hi = 1;
  std::vector<std::string> labels;

  static OptionDef binary(std::string name);
  static OptionDef integer(std::string name, int lo, int hi);
  static OptionDef enumerated(std::string name, std::vector<std::string> labels);

  int domain_min() const { return kind == OptionKind::integer ? lo : 0; }
  int domain_max() const;
  std::size_t domain_size() const {
    return static_cast<std::size_t>(domain_max() - domain_min()) + 1;
  }
  bool contains(int value) const {
    return value >= domain_min() && value <= domain_max();
  }
  /// Integer options are ordered and split by thresholds; binary and
  /// enumerated ones are split by equality.
  bool is_numeric() const { return kind == OptionKind::integer; }
  std::string format_value(int value) const;
};

struct Configuration {
  std::vector<int> values;

  auto operator<=>(const Configuration&) const = default;
  bool operator==(const Configuration&) const = default;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const noexcept;
};

/// Ordered option list. The objective is always minimized.
class ConfigSpace {
 public:
  ConfigSpace() = default;
  explicit ConfigSpace(std::vector<OptionDef> options);

  std::span<const OptionDef> options() const { return options_; }
  const OptionDef& option(std::size_t i) const { return options_.at(i); }
  std::size_t size() const { return options_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool contains(const Configuration& c) const;
  /// Number of distinct configurations (as a double; spaces get large).
  double cardinality() const;

 private:
  std::vector<OptionDef> options_;
};

struct Sample {
  Configuration config;
  double performance = 0.0;
  bool failed = false;  ///< failed trials carry +inf and are kept out of models
};

enum class InsertStatus { inserted, redundant, over_budget };

/// Measured samples plus the budget bookkeeping of the tuning loop.
class SampleSet {
 public:
  SampleSet(std::size_t budget, std::size_t initial_size);

  /// Initial measurements count towards s, later ones towards b.
  InsertStatus add_initial(Sample sample);
  InsertStatus add(Sample sample);

  bool contains(const Configuration& c) const { return seen_.contains(c); }
  std::span<const Sample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  std::size_t consumed() const { return consumed_; }
  std::size_t budget() const { return budget_; }
  std::size_t initial_size() const { return initial_size_; }
  /// Samples with finite performance, in insertion order.
  std::vector<Sample> finite_samples() const;
  std::optional<Sample> best() const;

 private:
  std::size_t budget_;
  std::size_t initial_size_;
  std::size_t initial_measured_ = 0;
  std::size_t consumed_ = 0;
  std::vector<Sample> samples_;
  std::unordered_set<Configuration, ConfigurationHash> seen_;
};

struct Rule;

struct SampleDraw {
  std::vector<Configuration> configs;
  bool exhausted = false;  ///< fewer than requested could be found
};

/// Draws `count` distinct configurations uniformly. Gives up after 1000
/// consecutive duplicate draws and reports exhaustion.
SampleDraw random_sample(const ConfigSpace& space, std::size_t count,
                         std::uint64_t seed);

Configuration random_configuration(const ConfigSpace& space, Rng& rng);

/// Uniform draw from the region bounded by `rule`; unconstrained options
/// range over their full domain.
Configuration sample_within_rule(const ConfigSpace& space, const Rule& rule,
                                 Rng& rng);

/// Every configuration of a small space, in lexicographic order.
std::vector<Configuration> enumerate_space(const ConfigSpace& space);

}  // namespace promisetune
