#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "promisetune/causal.hpp"
#include "promisetune/forest.hpp"
#include "promisetune/rules.hpp"
#include "promisetune/space.hpp"

namespace promisetune {

/// Raised by objectives when a measurement fails; the tuner records the trial
/// as failed (+inf) and still charges the budget.
class ObjectiveFailure : public Error {
 public:
  using Error::Error;
};

/// Black-box performance function (minimized).
struct Objective {
  std::string name;
  std::string provenance;
  std::function<double(const Configuration&)> evaluate;
};

/// Stopping rule for sampling inside one region.
struct GkdeConfig {
  std::size_t warmup = 10;
  std::size_t max_draws = 100;
  double threshold = 0.05;
};

struct TunerConfig {
  std::size_t budget = 100;
  std::size_t initial_size = 10;
  std::size_t leaf_param = 10;
  std::size_t tree_count = 100;
  GkdeConfig gkde;
  CiTestConfig ci;
  std::size_t max_rules = 200;
  std::size_t pdsep_max_path_length = 3;  ///< 0 = unbounded
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

/// Source marker for candidates drawn from the whole space.
inline constexpr int kWholeSpace = -1;

struct AcquisitionCandidate {
  Configuration config;
  double predicted_mean = 0.0;
  double predicted_std = 0.0;
  double ei = 0.0;
  int source_rule = kWholeSpace;
};

struct Trial {
  std::size_t iteration = 0;
  Sample sample;
  std::string source;  ///< "init", "rule:<i>", "fallback" or "random"
};

struct IterationStats {
  std::size_t iteration = 0;
  std::size_t learned = 0;     ///< |R_l|
  std::size_t intermediate = 0;  ///< |R_m|
  std::size_t purified = 0;    ///< |R_p|
  std::size_t candidates = 0;
  bool used_fallback = false;
};

struct TunerResult {
  std::string tuner;
  Configuration best_config;
  double best_performance = 0.0;
  std::vector<Trial> history;
  RuleSet final_rules;  ///< R_p of the last iteration
  std::optional<CausalReport> final_report;
  RuleSet final_learned;  ///< R_l of the last iteration
  std::vector<IterationStats> iterations;
  std::size_t evaluations = 0;
  bool space_exhausted = false;
  std::size_t rule_pipeline_runs = 0;
};

/// Closed-form expected improvement for minimization.
double expected_improvement(double mean, double stddev, double best);

/// Probability mass above `level` of a Gaussian KDE over `values` with
/// Silverman's bandwidth. A zero bandwidth degenerates to the empirical tail.
double kde_exceedance(const std::vector<double>& values, double level);

/// Draws from the region until the KDE of observed EI values predicts that
/// beating the current maximum is unlikely. Candidates are unique and in
/// first-draw order.
std::vector<AcquisitionCandidate> sample_rule_region(
    const ConfigSpace& space, const Rule& rule, const RegressionForest& surrogate,
    double best, const GkdeConfig& gkde, std::uint64_t seed, int source_rule = kWholeSpace,
    const SampleSet* measured = nullptr);

/// Rule-guided Bayesian optimization.
TunerResult run(const ConfigSpace& space, const Objective& objective,
                const TunerConfig& cfg);

/// Ablation: the same loop with rule learning and purification switched off.
TunerResult run_without_rules(const ConfigSpace& space, const Objective& objective,
                              const TunerConfig& cfg);

/// B distinct uniformly random configurations.
TunerResult run_random_search(const ConfigSpace& space, const Objective& objective,
                              const TunerConfig& cfg);

/// Per-iteration rule pipeline: learn, canonicalize, dedupe, featurize, purify.
struct RulePipelineResult {
  RuleSet learned;
  RuleSet intermediate;
  RuleSet purified;
  std::optional<CausalReport> report;
};

RulePipelineResult learn_promising_rules(const ConfigSpace& space,
                                         std::span<const Sample> samples,
                                         const TunerConfig& cfg, std::uint64_t seed,
                                         int iteration);

}  // namespace promisetune
