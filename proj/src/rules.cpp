#include "promisetune/rules.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace promisetune {

bool Constraint::admits(int value) const {
  if (interval) {
    const double v = value;
    return v >= lo && v < hi;
  }
  return std::binary_search(allowed.begin(), allowed.end(), value);
}

const Constraint* Rule::find(std::size_t option) const {
  auto it = std::lower_bound(
      constraints.begin(), constraints.end(), option,
      [](const Constraint& c, std::size_t opt) { return c.option < opt; });
  if (it != constraints.end() && it->option == option) return &*it;
  return nullptr;
}

FeaturizedSet::FeaturizedSet(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), cells_(rows * cols, 0), performance_(rows, 0.0) {}

std::vector<double> FeaturizedSet::column(std::size_t col) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, col) ? 1.0 : 0.0;
  return out;
}

namespace {

// Per-option accumulator while intersecting path predicates.
struct OptionBounds {
  double lo = -Constraint::kInf;
  double hi = Constraint::kInf;
  std::vector<int> allowed;  // categorical options only
};

std::vector<int> full_domain(const OptionDef& opt) {
  std::vector<int> values;
  for (int v = opt.domain_min(); v <= opt.domain_max(); ++v) values.push_back(v);
  return values;
}

}  // namespace

Rule canonicalize(const RawPath& path, const ConfigSpace& space) {
  std::map<std::size_t, OptionBounds> per_option;
  for (const Predicate& pred : path) {
    if (pred.option >= space.size()) {
      throw SchemaError("predicate references unknown option index " +
                        std::to_string(pred.option));
    }
    const OptionDef& opt = space.option(pred.option);
    auto [it, inserted] = per_option.try_emplace(pred.option);
    OptionBounds& bounds = it->second;
    if (inserted && !opt.is_numeric()) bounds.allowed = full_domain(opt);

    switch (pred.op) {
      case Predicate::Op::less_than:
      case Predicate::Op::not_less_than:
        if (!opt.is_numeric()) {
          // Thresholds on categorical options are read as label-index bounds.
          std::erase_if(bounds.allowed, [&](int v) {
            const bool below = v < pred.threshold;
            return pred.op == Predicate::Op::less_than ? !below : below;
          });
        } else if (pred.op == Predicate::Op::less_than) {
          bounds.hi = std::min(bounds.hi, pred.threshold);
        } else {
          bounds.lo = std::max(bounds.lo, pred.threshold);
        }
        break;
      case Predicate::Op::equals:
      case Predicate::Op::not_equals:
        if (opt.is_numeric()) {
          if (pred.op == Predicate::Op::equals) {
            bounds.lo = std::max<double>(bounds.lo, pred.value);
            bounds.hi = std::min<double>(bounds.hi, pred.value + 1.0);
          } else {
            throw SchemaError("inequality predicate on integer option '" +
                              opt.name + "'");
          }
        } else if (pred.op == Predicate::Op::equals) {
          std::erase_if(bounds.allowed, [&](int v) { return v != pred.value; });
        } else {
          std::erase_if(bounds.allowed, [&](int v) { return v == pred.value; });
        }
        break;
    }
  }

  Rule rule;
  for (auto& [index, bounds] : per_option) {
    const OptionDef& opt = space.option(index);
    Constraint c;
    c.option = index;
    if (opt.is_numeric()) {
      // x < t  <=>  x < ceil(t) and x >= t  <=>  x >= ceil(t) over integers.
      double lo = std::isfinite(bounds.lo) ? std::ceil(bounds.lo) : bounds.lo;
      double hi = std::isfinite(bounds.hi) ? std::ceil(bounds.hi) : bounds.hi;
      if (lo <= opt.domain_min()) lo = -Constraint::kInf;
      if (hi > opt.domain_max()) hi = Constraint::kInf;
      const double first = std::max<double>(lo, opt.domain_min());
      const double last = std::min<double>(hi, opt.domain_max() + 1.0);
      if (first >= last) {
        throw EmptyRegionError("contradictory predicates on option '" +
                               opt.name + "'");
      }
      if (!std::isfinite(lo) && !std::isfinite(hi)) continue;
      c.interval = true;
      c.lo = lo;
      c.hi = hi;
    } else {
      if (bounds.allowed.empty()) {
        throw EmptyRegionError("contradictory predicates on option '" +
                               opt.name + "'");
      }
      if (bounds.allowed.size() == opt.domain_size()) continue;
      c.interval = false;
      c.lo = -Constraint::kInf;
      c.hi = Constraint::kInf;
      c.allowed = std::move(bounds.allowed);
    }
    rule.constraints.push_back(std::move(c));
  }
  return rule;
}

RawPath to_path(const Rule& rule, const ConfigSpace& space) {
  RawPath path;
  for (const Constraint& c : rule.constraints) {
    if (c.interval) {
      if (std::isfinite(c.lo)) {
        path.push_back({c.option, Predicate::Op::not_less_than, c.lo, 0});
      }
      if (std::isfinite(c.hi)) {
        path.push_back({c.option, Predicate::Op::less_than, c.hi, 0});
      }
    } else {
      const OptionDef& opt = space.option(c.option);
      for (int v = opt.domain_min(); v <= opt.domain_max(); ++v) {
        if (!c.admits(v)) path.push_back({c.option, Predicate::Op::not_equals, 0.0, v});
      }
    }
  }
  return path;
}

Rule canonicalize(const Rule& rule, const ConfigSpace& space) {
  Rule out = canonicalize(to_path(rule, space), space);
  out.provenance = rule.provenance;
  return out;
}

RuleSet dedupe(std::span<const Rule> rules) {
  RuleSet out;
  std::map<std::vector<Constraint>, bool> seen;
  for (const Rule& r : rules) {
    if (seen.emplace(r.constraints, true).second) out.push_back(r);
  }
  return out;
}

bool fits(const Configuration& config, const Rule& rule) {
  for (const Constraint& c : rule.constraints) {
    if (c.option >= config.values.size() || !c.admits(config.values[c.option])) {
      return false;
    }
  }
  return true;
}

FeaturizedSet featurize(std::span<const Sample> samples,
                        std::span<const Rule> rules) {
  if (rules.empty()) throw EmptyFeaturesError("no rules to featurize");
  FeaturizedSet out(samples.size(), rules.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t k = 0; k < rules.size(); ++k) {
      out.set(i, k, fits(samples[i].config, rules[k]));
    }
    out.performance()[i] = samples[i].performance;
  }
  return out;
}

std::vector<int> admissible_values(const ConfigSpace& space, const Rule& rule,
                                   std::size_t option) {
  const OptionDef& opt = space.option(option);
  const Constraint* c = rule.find(option);
  std::vector<int> out;
  for (int v = opt.domain_min(); v <= opt.domain_max(); ++v) {
    if (c == nullptr || c->admits(v)) out.push_back(v);
  }
  return out;
}

bool satisfiable(const ConfigSpace& space, const Rule& rule) {
  for (const Constraint& c : rule.constraints) {
    if (c.option >= space.size()) return false;
    const OptionDef& opt = space.option(c.option);
    if (c.interval) {
      const double first = std::max<double>(std::ceil(c.lo), opt.domain_min());
      const double last = std::min<double>(c.hi, opt.domain_max() + 1.0);
      if (first >= last) return false;
    } else if (std::none_of(c.allowed.begin(), c.allowed.end(),
                            [&](int v) { return opt.contains(v); })) {
      return false;
    }
  }
  return true;
}

std::string to_string(const Rule& rule, const ConfigSpace& space) {
  std::ostringstream os;
  os << '<';
  bool first = true;
  for (const Constraint& c : rule.constraints) {
    if (!first) os << ", ";
    first = false;
    const OptionDef& opt = space.option(c.option);
    if (c.interval) {
      if (std::isfinite(c.lo)) os << c.lo << "<=";
      os << opt.name;
      if (std::isfinite(c.hi)) os << '<' << c.hi;
    } else if (c.allowed.size() == 1) {
      os << opt.name << "==" << opt.format_value(c.allowed.front());
    } else if (c.allowed.size() + 1 == opt.domain_size()) {
      for (int v = opt.domain_min(); v <= opt.domain_max(); ++v) {
        if (!c.admits(v)) os << opt.name << "!=" << opt.format_value(v);
      }
    } else {
      os << opt.name << " in {";
      for (std::size_t i = 0; i < c.allowed.size(); ++i) {
        if (i > 0) os << ',';
        os << opt.format_value(c.allowed[i]);
      }
      os << '}';
    }
  }
  os << '>';
  return os.str();
}

}  // namespace promisetune
