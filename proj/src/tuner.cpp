#include "promisetune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace promisetune {

void TunerConfig::validate() const {
  if (budget == 0) throw Error("budget must be positive");
  if (initial_size == 0) throw Error("initial sample size must be positive");
  if (initial_size > budget) throw Error("initial sample size exceeds the budget");
  if (leaf_param == 0) throw Error("leaf parameter l must be at least 1");
  if (tree_count == 0) throw Error("tree count must be positive");
  if (gkde.max_draws == 0) throw Error("GKDE draw cap must be positive");
  ci.validate();
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double expected_improvement(double mean, double stddev, double best) {
  const double gain = best - mean;
  if (!(stddev > 0.0)) return std::max(0.0, gain);
  const double z = gain / stddev;
  return std::max(0.0, gain * normal_cdf(z) + stddev * normal_pdf(z));
}

double kde_exceedance(const std::vector<double>& values, double level) {
  if (values.empty()) return 1.0;
  const double m = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= m;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sigma = values.size() > 1 ? std::sqrt(var / (m - 1.0)) : 0.0;
  const double bandwidth = 1.06 * sigma * std::pow(m, -0.2);

  double mass = 0.0;
  if (!(bandwidth > 0.0)) {
    for (double v : values) mass += v > level ? 1.0 : 0.0;
  } else {
    for (double v : values) mass += 1.0 - normal_cdf((level - v) / bandwidth);
  }
  return mass / m;
}

std::vector<AcquisitionCandidate> sample_rule_region(
    const ConfigSpace& space, const Rule& rule, const RegressionForest& surrogate,
    double best, const GkdeConfig& gkde, std::uint64_t seed, int source_rule,
    const SampleSet* measured) {
  if (!satisfiable(space, rule)) throw EmptyRegionError("rule bounds an empty region");
  Rng rng(seed);
  std::vector<AcquisitionCandidate> candidates;
  std::unordered_map<Configuration, double, ConfigurationHash> scored;
  std::vector<double> observed;
  double current_max = -std::numeric_limits<double>::infinity();

  for (std::size_t draw = 1; draw <= gkde.max_draws; ++draw) {
    Configuration c = sample_within_rule(space, rule, rng);
    double ei = 0.0;
    if (auto it = scored.find(c); it != scored.end()) {
      ei = it->second;
    } else {
      const Prediction pred = surrogate.predict(c);
      ei = expected_improvement(pred.mean, pred.stddev, best);
      scored.emplace(c, ei);
      if (measured == nullptr || !measured->contains(c)) {
        candidates.push_back({std::move(c), pred.mean, pred.stddev, ei, source_rule});
      }
    }
    observed.push_back(ei);
    current_max = std::max(current_max, ei);
    if (draw > gkde.warmup && kde_exceedance(observed, current_max) < gkde.threshold) {
      break;
    }
  }
  return candidates;
}

RulePipelineResult learn_promising_rules(const ConfigSpace& space,
                                         std::span<const Sample> samples,
                                         const TunerConfig& cfg, std::uint64_t seed,
                                         int iteration) {
  RulePipelineResult out;
  if (samples.size() < 2) return out;
  ForestParams params;
  params.min_leaf = cfg.leaf_param;
  params.tree_count = cfg.tree_count;
  params.seed = seed;
  params.threads = cfg.threads;
  const RegressionForest rule_forest = train_forest(space, samples, params);

  std::vector<Rule> rules;
  for (const RawPath& path : extract_paths(rule_forest)) {
    Rule rule = canonicalize(path, space);
    rule.provenance = iteration;
    rules.push_back(std::move(rule));
  }
  out.learned = dedupe(rules);
  if (out.learned.empty()) return out;

  const FeaturizedSet data = featurize(samples, out.learned);
  PurifyOptions options;
  options.ci = cfg.ci;
  options.ci.threads = cfg.threads;
  options.max_rules = cfg.max_rules;
  options.pdsep_max_path_length = cfg.pdsep_max_path_length;
  PurifyResult purified = purify(out.learned, data, options);
  out.intermediate = std::move(purified.intermediate);
  out.purified = std::move(purified.purified);
  out.report = std::move(purified.report);
  return out;
}

namespace {

enum class Mode { rules, whole_space };

Sample measure(const Objective& objective, const Configuration& config) {
  Sample sample{config, 0.0, false};
  try {
    sample.performance = objective.evaluate(config);
    if (!std::isfinite(sample.performance)) throw ObjectiveFailure("non-finite performance");
  } catch (const ObjectiveFailure&) {
    sample.performance = std::numeric_limits<double>::infinity();
    sample.failed = true;
  }
  return sample;
}

void finalize(TunerResult& result) {
  result.evaluations = result.history.size();
  bool first = true;
  for (const Trial& t : result.history) {
    if (first || t.sample.performance < result.best_performance) {
      result.best_performance = t.sample.performance;
      result.best_config = t.sample.config;
      first = false;
    }
  }
}

std::optional<Configuration> random_unmeasured(const ConfigSpace& space,
                                               const SampleSet& samples, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Configuration c = random_configuration(space, rng);
    if (!samples.contains(c)) return c;
  }
  return std::nullopt;
}

TunerResult run_loop(const ConfigSpace& space, const Objective& objective,
                     const TunerConfig& cfg, Mode mode) {
  cfg.validate();
  TunerResult result;
  result.tuner = mode == Mode::rules ? "PromiseTune" : "w/o Rules";
  SampleSet samples(cfg.budget, cfg.initial_size);

  const SampleDraw initial = random_sample(space, cfg.initial_size, derive_seed(cfg.seed, 0));
  result.space_exhausted = initial.exhausted;
  for (const Configuration& c : initial.configs) {
    Sample s = measure(objective, c);
    samples.add_initial(s);
    result.history.push_back({0, std::move(s), "init"});
  }

  std::size_t iteration = 0;
  while (samples.consumed() + cfg.initial_size < cfg.budget) {
    ++iteration;
    IterationStats stats;
    stats.iteration = iteration;
    const std::vector<Sample> finite = samples.finite_samples();

    RuleSet promising;
    if (mode == Mode::rules && finite.size() >= 2) {
      ++result.rule_pipeline_runs;
      RulePipelineResult pipeline = learn_promising_rules(
          space, finite, cfg, derive_seed(cfg.seed, iteration, 1),
          static_cast<int>(iteration));
      stats.learned = pipeline.learned.size();
      stats.intermediate = pipeline.intermediate.size();
      stats.purified = pipeline.purified.size();
      promising = pipeline.purified;
      result.final_rules = std::move(pipeline.purified);
      result.final_learned = std::move(pipeline.learned);
      result.final_report = std::move(pipeline.report);
    } else if (mode == Mode::rules) {
      result.final_rules.clear();
      result.final_learned.clear();
      result.final_report.reset();
    }

    std::optional<AcquisitionCandidate> chosen;
    std::string source;
    if (finite.size() >= 2) {
      ForestParams params;
      params.min_leaf = 1;
      params.tree_count = cfg.tree_count;
      params.seed = derive_seed(cfg.seed, iteration, 2);
      params.threads = cfg.threads;
      const RegressionForest surrogate = train_forest(space, finite, params);
      const double best =
          std::min_element(finite.begin(), finite.end(), [](const Sample& a, const Sample& b) {
            return a.performance < b.performance;
          })->performance;

      std::vector<std::vector<AcquisitionCandidate>> per_rule(promising.size());
      parallel_for(promising.size(), cfg.threads, [&](std::size_t i) {
        per_rule[i] = sample_rule_region(space, promising[i], surrogate, best, cfg.gkde,
                                         derive_seed(cfg.seed, iteration, 100 + i),
                                         static_cast<int>(i), &samples);
      });
      std::vector<AcquisitionCandidate> pool;
      for (auto& batch : per_rule) {
        for (auto& c : batch) pool.push_back(std::move(c));
      }
      if (pool.empty()) {
        stats.used_fallback = true;
        pool = sample_rule_region(space, Rule{}, surrogate, best, cfg.gkde,
                                  derive_seed(cfg.seed, iteration, 3), kWholeSpace, &samples);
      }
      stats.candidates = pool.size();
      for (auto& c : pool) {
        if (!chosen || c.ei > chosen->ei) chosen = c;
      }
      if (chosen) {
        source = chosen->source_rule == kWholeSpace
                     ? std::string("fallback")
                     : "rule:" + std::to_string(chosen->source_rule);
      }
    }

    Configuration next;
    if (chosen) {
      next = chosen->config;
    } else {
      Rng rng(derive_seed(cfg.seed, iteration, 4));
      auto c = random_unmeasured(space, samples, rng);
      if (!c) {
        result.space_exhausted = true;
        break;
      }
      next = std::move(*c);
      source = "random";
    }

    Sample s = measure(objective, next);
    samples.add(s);
    result.history.push_back({iteration, std::move(s), source});
    result.iterations.push_back(stats);
  }
  finalize(result);
  return result;
}

}  // namespace

TunerResult run(const ConfigSpace& space, const Objective& objective,
                const TunerConfig& cfg) {
  return run_loop(space, objective, cfg, Mode::rules);
}

TunerResult run_without_rules(const ConfigSpace& space, const Objective& objective,
                              const TunerConfig& cfg) {
  return run_loop(space, objective, cfg, Mode::whole_space);
}

TunerResult run_random_search(const ConfigSpace& space, const Objective& objective,
                              const TunerConfig& cfg) {
  cfg.validate();
  TunerResult result;
  result.tuner = "Random Search";
  const SampleDraw draw = random_sample(space, cfg.budget, derive_seed(cfg.seed, 7));
  result.space_exhausted = draw.exhausted;
  std::size_t index = 0;
  for (const Configuration& c : draw.configs) {
    result.history.push_back({index++, measure(objective, c), "random"});
  }
  finalize(result);
  return result;
}

}  // namespace promisetune
