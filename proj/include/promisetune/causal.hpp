#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promisetune/rules.hpp"

namespace promisetune {

struct CiTestConfig {
  double alpha = 0.05;
  std::size_t max_conditioning_size = 3;
  unsigned threads = 1;

  void validate() const;
};

enum class CiStatus { independent, dependent, inconclusive };

struct CiResult {
  CiStatus status = CiStatus::dependent;
  double p_value = 0.0;

  /// Inconclusive tests count as dependence.
  bool independent() const { return status == CiStatus::independent; }
};

/// Fisher-z conditional independence test on partial correlations.
/// Columns are the rule features followed by the performance column, so node
/// `cols()` of a FeaturizedSet is the performance node.
class FisherZTest {
 public:
  FisherZTest(const FeaturizedSet& data, double alpha);
  /// Generic columns (used by tests with synthetic data).
  FisherZTest(std::vector<std::vector<double>> columns, double alpha);

  std::size_t node_count() const { return nodes_; }
  std::size_t sample_count() const { return samples_; }
  double alpha() const { return alpha_; }
  double correlation(std::size_t i, std::size_t j) const {
    return corr_[i * nodes_ + j];
  }

  CiResult test(std::size_t i, std::size_t j,
                std::span<const std::size_t> cond) const;

 private:
  void build(const std::vector<std::vector<double>>& columns);
  /// nullopt when either variable is fully explained by `given`.
  template <typename Matrix>
  std::optional<double> partial_correlation(std::size_t i, std::size_t j,
                                            const std::vector<std::size_t>& given) const;

  std::size_t nodes_ = 0;
  std::size_t samples_ = 0;
  double alpha_;
  std::vector<double> corr_;
  std::vector<bool> constant_;
};

/// Convenience wrapper over FisherZTest for a one-off test.
CiResult ci_test(const FeaturizedSet& data, std::size_t i, std::size_t j,
                 std::span<const std::size_t> cond, double alpha);

/// Endpoint marks of a partial ancestral graph.
enum class Mark : std::uint8_t { none = 0, circle, arrow, tail };

/// mark(a, b) is the endpoint mark at b on the edge a *-* b.
class Pag {
 public:
  explicit Pag(std::size_t nodes = 0);

  std::size_t size() const { return nodes_; }
  bool adjacent(std::size_t a, std::size_t b) const {
    return mark(a, b) != Mark::none;
  }
  Mark mark(std::size_t a, std::size_t b) const { return marks_[a * nodes_ + b]; }
  void set_mark(std::size_t a, std::size_t b, Mark m) { marks_[a * nodes_ + b] = m; }
  void add_edge(std::size_t a, std::size_t b, Mark at_a = Mark::circle,
                Mark at_b = Mark::circle);
  void remove_edge(std::size_t a, std::size_t b);
  std::vector<std::size_t> neighbors(std::size_t a) const;
  std::size_t edge_count() const;
  /// Edge list as text, e.g. "0 o-> 3".
  std::string to_string() const;

 private:
  std::size_t nodes_;
  std::vector<Mark> marks_;
};

struct FciOptions {
  CiTestConfig ci;
  /// Skip the possible-d-separation stage (yields the plain PC-style skeleton).
  bool possible_dsep = true;
  /// Longest path explored when collecting possible-d-separating sets;
  /// 0 means unbounded.
  std::size_t pdsep_max_path_length = 0;
};

struct FciResult {
  Pag pag;
  /// sepsets[i * n + j] for removed edges.
  std::vector<std::vector<std::size_t>> sepsets;
  std::size_t tests_run = 0;
};

/// FCI over an arbitrary CI oracle: skeleton, possible-d-sep refinement,
/// collider orientation and orientation rules R1-R4, R8-R10.
FciResult fci(const FisherZTest& test, const FciOptions& options);

/// FCI over rule features plus performance (last node).
Pag fci(const FeaturizedSet& data, const CiTestConfig& cfg);

/// True iff `target` is reachable from `source` along a possibly directed
/// path (no edge entered against an arrowhead or tail orientation).
bool possibly_directed_path(const Pag& pag, std::size_t source,
                            std::size_t target);

/// Indices of rules (nodes 0..k-1) with a possibly directed path to the
/// performance node (node k).
std::vector<std::size_t> connected_rules(const Pag& pag);

RuleSet prune_disconnected(const Pag& pag, std::span<const Rule> rules);

/// theta = mean(p | fits) - mean(p | violates); empty when the rule column is
/// constant over the data.
std::optional<double> average_causal_effect(const FeaturizedSet& data,
                                            std::size_t rule_index);

struct RuleCausality {
  bool screened = true;  ///< passed the rule-count guard and entered FCI
  bool connected_to_p = false;
  std::optional<double> theta;
  bool kept = false;
};

struct CausalReport {
  std::vector<RuleCausality> rules;  ///< aligned with the input rules
  std::size_t guard_dropped = 0;
  std::size_t fci_nodes = 0;
  std::size_t fci_edges = 0;
  std::size_t ci_tests = 0;
  std::string pag;
};

struct PurifyOptions {
  CiTestConfig ci;
  std::size_t max_rules = 200;
  bool possible_dsep = true;
  /// Bounded by default: unbounded searches over ~200 rule nodes run to
  /// millions of tests per call.
  std::size_t pdsep_max_path_length = 3;
};

struct PurifyResult {
  RuleSet intermediate;  ///< R_m
  RuleSet purified;      ///< R_p
  CausalReport report;
};

/// R_l -> R_m (possibly directed path to performance) -> R_p (theta < 0).
PurifyResult purify(std::span<const Rule> rules, const FeaturizedSet& data,
                    const PurifyOptions& options);

}  // namespace promisetune
