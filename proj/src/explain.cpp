#include "promisetune/explain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace promisetune {

void ExplainConfig::validate() const {
  if (!(k > 0.0 && k <= 100.0)) throw Error("k must lie in (0, 100]");
  if (min_hits == 0) throw Error("min_hits must be at least 1");
}

RuleSet extract_explainable(std::span<const Rule> purified,
                            std::span<const Sample> samples, const ExplainConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw InsufficientDataError("no measured samples to explain");
  RuleSet out;
  if (purified.empty()) return out;

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].performance < samples[b].performance;
  });
  const auto top = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(cfg.k / 100.0 * static_cast<double>(samples.size()) - 1e-9)));
  order.resize(std::min(top, order.size()));

  for (const Rule& rule : purified) {
    std::size_t hits = 0;
    for (std::size_t i : order) hits += fits(samples[i].config, rule) ? 1 : 0;
    if (hits >= cfg.min_hits) out.push_back(rule);
  }
  return out;
}

std::vector<OptionImportance> important_options(std::span<const Rule> rules,
                                                const ConfigSpace& space) {
  std::vector<std::size_t> counts(space.size(), 0);
  for (const Rule& r : rules) {
    for (const Constraint& c : r.constraints) ++counts[c.option];
  }
  std::vector<std::size_t> order(space.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<OptionImportance> out;
  for (std::size_t i : order) {
    if (counts[i] > 0) out.push_back({space.option(i).name, counts[i]});
  }
  return out;
}

std::vector<OptionInteraction> analyze_interactions(std::span<const Rule> rules,
                                                    const ConfigSpace& space) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  for (const Rule& r : rules) {
    for (std::size_t i = 0; i < r.constraints.size(); ++i) {
      for (std::size_t j = i + 1; j < r.constraints.size(); ++j) {
        auto a = r.constraints[i].option;
        auto b = r.constraints[j].option;
        if (a > b) std::swap(a, b);
        ++counts[{a, b}];
      }
    }
  }
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::size_t>> ranked(
      counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  std::vector<OptionInteraction> out;
  for (const auto& [pair, count] : ranked) {
    out.push_back({space.option(pair.first).name, space.option(pair.second).name, count});
  }
  return out;
}

namespace {

// One admissible piece of an option's domain with the rules covering it.
struct Cell {
  int first = 0;  // inclusive
  int last = 0;   // inclusive
  std::vector<std::size_t> cover;
};

struct OptionCells {
  std::size_t constrained_by = 0;
  std::size_t best = 0;
  std::vector<Cell> winners;  // maximal integer cells, merged when covers coincide
};

OptionCells analyze_option(std::span<const Rule> rules, const ConfigSpace& space,
                           std::size_t option) {
  const OptionDef& opt = space.option(option);
  OptionCells out;
  std::vector<const Constraint*> constraints(rules.size(), nullptr);
  for (std::size_t r = 0; r < rules.size(); ++r) {
    constraints[r] = rules[r].find(option);
    if (constraints[r] != nullptr) ++out.constrained_by;
  }
  if (out.constrained_by == 0) return out;

  std::vector<Cell> cells;
  if (opt.is_numeric()) {
    std::vector<double> cuts{static_cast<double>(opt.domain_min()),
                             static_cast<double>(opt.domain_max()) + 1.0};
    for (const Constraint* c : constraints) {
      if (c == nullptr) continue;
      for (double e : {c->lo, c->hi}) {
        if (std::isfinite(e) && e > opt.domain_min() && e <= opt.domain_max()) {
          cuts.push_back(std::ceil(e));
        }
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      Cell cell{static_cast<int>(cuts[k]), static_cast<int>(cuts[k + 1]) - 1, {}};
      for (std::size_t r = 0; r < rules.size(); ++r) {
        const Constraint* c = constraints[r];
        if (c != nullptr && c->lo <= cuts[k] && cuts[k + 1] <= c->hi) cell.cover.push_back(r);
      }
      cells.push_back(std::move(cell));
    }
  } else {
    for (int v = opt.domain_min(); v <= opt.domain_max(); ++v) {
      Cell cell{v, v, {}};
      for (std::size_t r = 0; r < rules.size(); ++r) {
        if (constraints[r] != nullptr && constraints[r]->admits(v)) cell.cover.push_back(r);
      }
      cells.push_back(std::move(cell));
    }
  }

  for (const Cell& cell : cells) out.best = std::max(out.best, cell.cover.size());
  if (!opt.is_numeric()) return out;
  for (const Cell& cell : cells) {
    if (cell.cover.size() != out.best) continue;
    if (!out.winners.empty() && out.winners.back().cover == cell.cover &&
        out.winners.back().last + 1 == cell.first) {
      out.winners.back().last = cell.last;
      continue;
    }
    out.winners.push_back(cell);
  }
  return out;
}

// Interval constraint for a run of integer cells.
Constraint cell_constraint(const ConfigSpace& space, std::size_t option, const Cell& cell) {
  RawPath path;
  path.push_back({option, Predicate::Op::not_less_than, static_cast<double>(cell.first), 0});
  path.push_back({option, Predicate::Op::less_than, static_cast<double>(cell.last) + 1.0, 0});
  Rule rule = canonicalize(path, space);
  if (!rule.constraints.empty()) return rule.constraints.front();
  Constraint unbounded;
  unbounded.option = option;
  return unbounded;
}

}  // namespace

std::vector<PromisingRegion> most_common_overlaps(std::span<const Rule> rules,
                                                  const ConfigSpace& space) {
  std::vector<PromisingRegion> regions;
  if (rules.empty()) return regions;

  struct Alternative {
    Constraint constraint;
    std::size_t support;
  };
  std::vector<std::vector<Alternative>> per_option(space.size());
  std::vector<std::vector<Alternative>> fallback(space.size());
  bool any_overlap = false;

  for (std::size_t option = 0; option < space.size(); ++option) {
    const OptionCells cells = analyze_option(rules, space, option);
    if (cells.constrained_by == 0 || cells.best == 0) continue;
    const OptionDef& opt = space.option(option);

    std::vector<Alternative> alternatives;
    if (opt.is_numeric()) {
      for (const Cell& cell : cells.winners) {
        alternatives.push_back({cell_constraint(space, option, cell), cells.best});
      }
    } else {
      // Group labels by identical cover set.
      std::vector<std::pair<std::vector<std::size_t>, std::vector<int>>> groups;
      for (int v = opt.domain_min(); v <= opt.domain_max(); ++v) {
        std::vector<std::size_t> cover;
        for (std::size_t r = 0; r < rules.size(); ++r) {
          const Constraint* c = rules[r].find(option);
          if (c != nullptr && c->admits(v)) cover.push_back(r);
        }
        if (cover.size() != cells.best) continue;
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == cover; });
        if (it == groups.end()) {
          groups.push_back({cover, {v}});
        } else {
          it->second.push_back(v);
        }
      }
      for (const auto& [cover, labels] : groups) {
        Constraint c;
        c.option = option;
        c.interval = false;
        c.allowed = labels;
        if (labels.size() == opt.domain_size()) continue;
        alternatives.push_back({c, cells.best});
      }
    }
    if (alternatives.empty()) continue;

    const bool overlaps = cells.best >= 2 || cells.constrained_by == 1;
    if (overlaps) {
      any_overlap = true;
      per_option[option] = alternatives;
    }
    fallback[option] = std::move(alternatives);
  }
  if (!any_overlap) per_option = std::move(fallback);

  constexpr std::size_t kMaxRegions = 256;
  regions.push_back({});
  for (std::size_t option = 0; option < space.size(); ++option) {
    const auto& alternatives = per_option[option];
    if (alternatives.empty()) continue;
    std::vector<PromisingRegion> next;
    for (const PromisingRegion& partial : regions) {
      for (const Alternative& alt : alternatives) {
        if (next.size() >= kMaxRegions) break;
        PromisingRegion region = partial;
        region.region.constraints.push_back(alt.constraint);
        region.support.push_back(alt.support);
        next.push_back(std::move(region));
      }
    }
    regions = std::move(next);
  }
  if (regions.size() == 1 && regions.front().region.empty()) regions.clear();
  return regions;
}

ExplanationReport explain(std::span<const Rule> purified, std::span<const Sample> samples,
                          const ConfigSpace& space, const ExplainConfig& cfg) {
  ExplanationReport report;
  report.k = cfg.k;
  report.explainable_rules = extract_explainable(purified, samples, cfg);
  report.important_options = important_options(report.explainable_rules, space);
  report.interactions = analyze_interactions(report.explainable_rules, space);
  report.promising_regions = most_common_overlaps(report.explainable_rules, space);
  return report;
}

std::string format_report(const ExplanationReport& report, const ConfigSpace& space) {
  std::ostringstream os;
  os << "Explainable rules (k=" << report.k << "%): " << report.explainable_rules.size()
     << '\n';
  for (std::size_t i = 0; i < report.explainable_rules.size(); ++i) {
    os << "  R" << (i + 1) << " = " << to_string(report.explainable_rules[i], space) << '\n';
  }
  os << "Important options:";
  if (report.important_options.empty()) os << " none";
  for (const auto& o : report.important_options) os << ' ' << o.option << '(' << o.rules << ')';
  os << '\n' << "Option interactions:";
  if (report.interactions.empty()) os << " none";
  for (const auto& i : report.interactions) {
    os << ' ' << i.first << '+' << i.second << '(' << i.rules << ')';
  }
  os << '\n' << "Promising regions: " << report.promising_regions.size() << '\n';
  for (const auto& r : report.promising_regions) {
    os << "  " << to_string(r.region, space) << '\n';
  }
  return os.str();
}

}  // namespace promisetune
