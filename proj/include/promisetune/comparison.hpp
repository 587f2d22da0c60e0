#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "promisetune/scott_knott.hpp"
#include "promisetune/space.hpp"
#include "promisetune/tuner.hpp"

namespace promisetune {

struct BenchObjective {
  std::string name;
  ConfigSpace space;
  Objective objective;
};

struct TunerEntry {
  std::string name;
  std::function<TunerResult(const ConfigSpace&, const Objective&, const TunerConfig&)> run;
};

/// PromiseTune, w/o Rules and Random Search, in that order.
std::vector<TunerEntry> default_tuners();

/// Best performance found by one (objective, budget, tuner, repeat) run.
struct RunRecord {
  std::string objective;
  std::size_t budget = 0;
  std::string tuner;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  std::size_t evaluations = 0;
  double best = 0.0;
  double normalized = 0.0;
};

struct RankCell {
  std::string objective;
  std::size_t budget = 0;
  std::string tuner;
  double mean = 0.0;    ///< of normalized best performance
  double stddev = 0.0;  ///< sample standard deviation
  int rank = 1;
};

struct RankTable {
  std::vector<std::string> tuners;
  std::vector<RunRecord> runs;
  std::vector<RankCell> cells;

  const RankCell& cell(const std::string& objective, std::size_t budget,
                       const std::string& tuner) const;
  std::string runs_csv() const;
  std::string to_json() const;
  /// One table per budget, objectives as rows, "[rank] mean (std)" cells.
  std::string to_markdown() const;
};

struct ComparisonConfig {
  std::vector<std::size_t> budgets{50, 100, 150, 200};
  std::size_t repeats = 30;
  std::uint64_t seed = 0;
  unsigned threads = 1;   ///< concurrent runs
  TunerConfig base;       ///< budget and seed are overridden per run
  ScottKnottConfig ranking;
};

/// Min-max normalization: best maps to 0, worst to 1, all-equal to 0.
/// Non-finite values map to 1.
std::vector<double> normalize_cell(const std::vector<double>& values);

RankTable run_comparison(const std::vector<BenchObjective>& objectives,
                         const std::vector<TunerEntry>& tuners, const ComparisonConfig& cfg);

}  // namespace promisetune
