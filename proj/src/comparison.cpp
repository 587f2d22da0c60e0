#include "promisetune/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace promisetune {

std::vector<TunerEntry> default_tuners() {
  return {{"PromiseTune", run}, {"w/o Rules", run_without_rules},
          {"Random Search", run_random_search}};
}

std::vector<double> normalize_cell(const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) {
      out.push_back(1.0);
    } else if (hi > lo) {
      out.push_back((v - lo) / (hi - lo));
    } else {
      out.push_back(0.0);
    }
  }
  return out;
}

const RankCell& RankTable::cell(const std::string& objective, std::size_t budget,
                                const std::string& tuner) const {
  for (const RankCell& c : cells) {
    if (c.objective == objective && c.budget == budget && c.tuner == tuner) return c;
  }
  throw Error("no rank cell for " + objective + "/" + std::to_string(budget) + "/" + tuner);
}

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

std::string RankTable::runs_csv() const {
  std::ostringstream os;
  os << "objective,budget,tuner,repeat,seed,evaluations,best,normalized\n";
  for (const RunRecord& r : runs) {
    os << r.objective << ',' << r.budget << ',' << r.tuner << ',' << r.repeat << ',' << r.seed
       << ',' << r.evaluations << ',' << fmt("%.17g", r.best) << ','
       << fmt("%.17g", r.normalized) << '\n';
  }
  return os.str();
}

std::string RankTable::to_json() const {
  nlohmann::ordered_json j;
  j["tuners"] = tuners;
  j["cells"] = nlohmann::ordered_json::array();
  for (const RankCell& c : cells) {
    j["cells"].push_back({{"objective", c.objective},
                          {"budget", c.budget},
                          {"tuner", c.tuner},
                          {"rank", c.rank},
                          {"mean", c.mean},
                          {"stddev", c.stddev}});
  }
  return j.dump(2) + "\n";
}

std::string RankTable::to_markdown() const {
  std::vector<std::size_t> budgets;
  std::vector<std::string> objectives;
  for (const RankCell& c : cells) {
    if (std::find(budgets.begin(), budgets.end(), c.budget) == budgets.end()) {
      budgets.push_back(c.budget);
    }
    if (std::find(objectives.begin(), objectives.end(), c.objective) == objectives.end()) {
      objectives.push_back(c.objective);
    }
  }
  std::ostringstream os;
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    if (b > 0) os << '\n';
    os << "### B = " << budgets[b] << "\n\n| System |";
    for (const auto& t : tuners) os << ' ' << t << " |";
    os << "\n|---|";
    for (std::size_t t = 0; t < tuners.size(); ++t) os << "---|";
    os << '\n';
    for (const auto& o : objectives) {
      os << "| " << o << " |";
      for (const auto& t : tuners) {
        const RankCell& c = cell(o, budgets[b], t);
        os << " [" << c.rank << "] " << fmt("%.3f", c.mean) << " (" << fmt("%.3f", c.stddev)
           << ") |";
      }
      os << '\n';
    }
  }
  return os.str();
}

RankTable run_comparison(const std::vector<BenchObjective>& objectives,
                         const std::vector<TunerEntry>& tuners, const ComparisonConfig& cfg) {
  if (cfg.repeats < 2) throw Error("comparison needs at least two repeats");
  if (tuners.empty()) throw Error("no tuners to compare");
  if (objectives.empty()) throw Error("no objectives to compare");
  if (cfg.budgets.empty()) throw Error("no budgets to compare");
  for (std::size_t budget : cfg.budgets) {
    if (budget == 0) throw Error("budgets must be positive");
  }
  std::set<std::string> names;
  for (const auto& t : tuners) {
    if (!names.insert(t.name).second) throw Error("duplicate tuner name '" + t.name + "'");
  }
  names.clear();
  for (const auto& o : objectives) {
    if (!names.insert(o.name).second) throw Error("duplicate objective name '" + o.name + "'");
  }

  RankTable table;
  for (const auto& t : tuners) table.tuners.push_back(t.name);

  // Every run is independent; results land at fixed indices.
  const std::size_t per_cell = tuners.size() * cfg.repeats;
  const std::size_t total = objectives.size() * cfg.budgets.size() * per_cell;
  table.runs.resize(total);
  parallel_for(total, cfg.threads, [&](std::size_t index) {
    const std::size_t o = index / (cfg.budgets.size() * per_cell);
    const std::size_t b = index / per_cell % cfg.budgets.size();
    const std::size_t t = index % per_cell / cfg.repeats;
    const std::size_t r = index % cfg.repeats;
    TunerConfig run_cfg = cfg.base;
    run_cfg.budget = cfg.budgets[b];
    run_cfg.initial_size = std::min(cfg.base.initial_size, run_cfg.budget);
    run_cfg.seed = derive_seed(derive_seed(cfg.seed, o, b), t, r);
    run_cfg.threads = 1;
    const TunerResult result =
        tuners[t].run(objectives[o].space, objectives[o].objective, run_cfg);
    RunRecord& rec = table.runs[index];
    rec.objective = objectives[o].name;
    rec.budget = cfg.budgets[b];
    rec.tuner = tuners[t].name;
    rec.repeat = r;
    rec.seed = run_cfg.seed;
    rec.evaluations = result.evaluations;
    rec.best = result.best_performance;
  });

  for (std::size_t cell = 0; cell * per_cell < total; ++cell) {
    const auto first = table.runs.begin() + static_cast<std::ptrdiff_t>(cell * per_cell);
    std::vector<double> best;
    for (auto it = first; it != first + static_cast<std::ptrdiff_t>(per_cell); ++it) {
      best.push_back(it->best);
    }
    const std::vector<double> normalized = normalize_cell(best);
    std::map<std::string, std::vector<double>> groups;
    for (std::size_t i = 0; i < per_cell; ++i) {
      first[static_cast<std::ptrdiff_t>(i)].normalized = normalized[i];
      groups[tuners[i / cfg.repeats].name].push_back(normalized[i]);
    }
    const auto ranks = scott_knott_esd(groups, cfg.ranking);
    for (const auto& t : tuners) {
      const auto& v = groups[t.name];
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      table.cells.push_back({first->objective, first->budget, t.name, mean,
                             std::sqrt(ss / static_cast<double>(v.size() - 1)),
                             ranks.at(t.name)});
    }
  }
  return table;
}

}  // namespace promisetune
