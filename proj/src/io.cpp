#include "promisetune/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace promisetune {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path + "'");
}

Json space_to_json(const ConfigSpace& space) {
  Json options = Json::array();
  for (const OptionDef& opt : space.options()) {
    Json o;
    o["name"] = opt.name;
    switch (opt.kind) {
      case OptionKind::binary:
        o["kind"] = "binary";
        break;
      case OptionKind::integer:
        o["kind"] = "int";
        o["lo"] = opt.lo;
        o["hi"] = opt.hi;
        break;
      case OptionKind::enumerated:
        o["kind"] = "enum";
        o["labels"] = opt.labels;
        break;
    }
    options.push_back(std::move(o));
  }
  return Json{{"options", std::move(options)}};
}

ConfigSpace space_from_json(const Json& j) {
  try {
    std::vector<OptionDef> options;
    for (const Json& o : j.at("options")) {
      const auto name = o.at("name").get<std::string>();
      const auto kind = o.at("kind").get<std::string>();
      if (kind == "binary") {
        options.push_back(OptionDef::binary(name));
      } else if (kind == "int") {
        options.push_back(OptionDef::integer(name, o.at("lo").get<int>(), o.at("hi").get<int>()));
      } else if (kind == "enum") {
        options.push_back(
            OptionDef::enumerated(name, o.at("labels").get<std::vector<std::string>>()));
      } else {
        throw InvalidSpaceError("unknown option kind '" + kind + "'");
      }
    }
    return ConfigSpace(std::move(options));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpaceError(std::string("malformed space definition: ") + e.what());
  }
}

namespace {

Json value_json(const OptionDef& opt, int v) {
  if (opt.kind == OptionKind::enumerated) return opt.format_value(v);
  return v;
}

int value_from_json(const OptionDef& opt, const Json& j) {
  if (opt.kind == OptionKind::enumerated) {
    const auto label = j.get<std::string>();
    const auto it = std::find(opt.labels.begin(), opt.labels.end(), label);
    if (it == opt.labels.end()) {
      throw SchemaError("unknown label '" + label + "' for option '" + opt.name + "'");
    }
    return static_cast<int>(it - opt.labels.begin());
  }
  return j.get<int>();
}

}  // namespace

Json rule_to_json(const Rule& rule, const ConfigSpace& space) {
  Json out = Json::array();
  for (const Constraint& c : rule.constraints) {
    const OptionDef& opt = space.option(c.option);
    if (c.interval) {
      if (std::isfinite(c.lo)) {
        out.push_back({{"option", opt.name}, {"op", ">="}, {"value", static_cast<int>(c.lo)}});
      }
      if (std::isfinite(c.hi)) {
        out.push_back({{"option", opt.name}, {"op", "<"}, {"value", static_cast<int>(c.hi)}});
      }
      continue;
    }
    if (c.allowed.size() == 1) {
      out.push_back({{"option", opt.name}, {"op", "=="}, {"value", value_json(opt, c.allowed[0])}});
    } else if (c.allowed.size() + 1 == opt.domain_size()) {
      int missing = opt.domain_min();
      while (std::binary_search(c.allowed.begin(), c.allowed.end(), missing)) ++missing;
      out.push_back({{"option", opt.name}, {"op", "!="}, {"value", value_json(opt, missing)}});
    } else {
      Json values = Json::array();
      for (int v : c.allowed) values.push_back(value_json(opt, v));
      out.push_back({{"option", opt.name}, {"op", "in"}, {"values", std::move(values)}});
    }
  }
  return out;
}

Rule rule_from_json(const Json& j, const ConfigSpace& space) {
  if (!j.is_array()) throw SchemaError("a rule must be a JSON array of predicates");
  try {
    std::vector<Constraint> merged;
    auto slot = [&](std::size_t option) -> Constraint& {
      for (Constraint& c : merged) {
        if (c.option == option) return c;
      }
      Constraint c;
      c.option = option;
      c.interval = space.option(option).is_numeric();
      if (!c.interval) {
        for (int v = space.option(option).domain_min(); v <= space.option(option).domain_max();
             ++v) {
          c.allowed.push_back(v);
        }
      }
      merged.push_back(std::move(c));
      return merged.back();
    };
    for (const Json& p : j) {
      const auto name = p.at("option").get<std::string>();
      const auto index = space.index_of(name);
      if (!index) throw SchemaError("unknown option '" + name + "'");
      const OptionDef& opt = space.option(*index);
      const auto op = p.at("op").get<std::string>();
      Constraint& c = slot(*index);
      if (op == "<" || op == ">=") {
        if (!opt.is_numeric()) throw SchemaError("'" + op + "' on non-integer option " + name);
        const double v = p.at("value").get<double>();
        if (op == "<") {
          c.hi = std::min(c.hi, v);
        } else {
          c.lo = std::max(c.lo, v);
        }
        continue;
      }
      std::vector<int> values;
      if (op == "in") {
        for (const Json& v : p.at("values")) values.push_back(value_from_json(opt, v));
      } else if (op == "==" || op == "!=") {
        values.push_back(value_from_json(opt, p.at("value")));
      } else {
        throw SchemaError("unknown operator '" + op + "'");
      }
      if (opt.is_numeric()) {
        // Equality on an integer option becomes a unit interval.
        if (op == "!=" || values.size() != 1) {
          throw SchemaError("'" + op + "' is not supported on integer option " + name);
        }
        c.lo = std::max(c.lo, static_cast<double>(values[0]));
        c.hi = std::min(c.hi, static_cast<double>(values[0]) + 1.0);
        continue;
      }
      std::sort(values.begin(), values.end());
      std::vector<int> kept;
      for (int v : c.allowed) {
        const bool listed = std::binary_search(values.begin(), values.end(), v);
        if (listed == (op != "!=")) kept.push_back(v);
      }
      c.allowed = std::move(kept);
    }
    std::sort(merged.begin(), merged.end(),
              [](const Constraint& a, const Constraint& b) { return a.option < b.option; });
    return canonicalize(Rule{std::move(merged), 0}, space);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed rule: ") + e.what());
  }
}

Json rules_to_json(std::span<const Rule> rules, const ConfigSpace& space) {
  Json out = Json::array();
  for (const Rule& r : rules) out.push_back(rule_to_json(r, space));
  return out;
}

RuleSet rules_from_json(const Json& j, const ConfigSpace& space) {
  if (!j.is_array()) throw SchemaError("a rule set must be a JSON array");
  RuleSet out;
  for (const Json& r : j) out.push_back(rule_from_json(r, space));
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string trials_csv(std::span<const Trial> trials, const ConfigSpace& space) {
  std::ostringstream os;
  os << "iteration";
  for (const OptionDef& opt : space.options()) os << ',' << opt.name;
  os << ",performance,source\n";
  for (const Trial& t : trials) {
    os << t.iteration;
    for (std::size_t i = 0; i < space.size(); ++i) {
      os << ',' << space.option(i).format_value(t.sample.config.values[i]);
    }
    os << ',' << format_double(t.sample.performance) << ',' << t.source << '\n';
  }
  return os.str();
}

std::vector<Trial> parse_trials_csv(const std::string& text, const ConfigSpace& space) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty trial log");
  const auto header = split_csv(line);
  if (header.size() != space.size() + 3 || header.front() != "iteration" ||
      header[header.size() - 2] != "performance" || header.back() != "source") {
    throw LoadError("trial log header does not match the space");
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (header[i + 1] != space.option(i).name) {
      throw LoadError("trial log column '" + header[i + 1] + "' does not match option '" +
                      space.option(i).name + "'");
    }
  }
  std::vector<Trial> trials;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) throw LoadError("malformed trial row: " + line);
    Trial t;
    char* end = nullptr;
    t.iteration = std::strtoull(fields[0].c_str(), &end, 10);
    if (*end != '\0') throw LoadError("bad iteration in row: " + line);
    for (std::size_t i = 0; i < space.size(); ++i) {
      const OptionDef& opt = space.option(i);
      int v = 0;
      if (opt.kind == OptionKind::enumerated) {
        const auto it = std::find(opt.labels.begin(), opt.labels.end(), fields[i + 1]);
        if (it == opt.labels.end()) throw LoadError("unknown label in row: " + line);
        v = static_cast<int>(it - opt.labels.begin());
      } else {
        v = static_cast<int>(std::strtol(fields[i + 1].c_str(), &end, 10));
        if (*end != '\0' || !opt.contains(v)) throw LoadError("bad value in row: " + line);
      }
      t.sample.config.values.push_back(v);
    }
    const std::string& perf = fields[space.size() + 1];
    t.sample.performance = std::strtod(perf.c_str(), &end);
    if (*end != '\0' || perf.empty()) throw LoadError("bad performance in row: " + line);
    t.sample.failed = !std::isfinite(t.sample.performance);
    t.source = fields.back();
    trials.push_back(std::move(t));
  }
  return trials;
}

namespace {

Json config_json(const Configuration& c, const ConfigSpace& space) {
  Json out = Json::object();
  for (std::size_t i = 0; i < space.size() && i < c.values.size(); ++i) {
    out[space.option(i).name] = value_json(space.option(i), c.values[i]);
  }
  return out;
}

Json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

Json result_to_json(const TunerResult& result, const ConfigSpace& space,
                    const TunerConfig& cfg) {
  Json j;
  j["tuner"] = result.tuner;
  j["seed"] = cfg.seed;
  j["budget"] = cfg.budget;
  j["initial_size"] = cfg.initial_size;
  j["leaf_param"] = cfg.leaf_param;
  j["evaluations"] = result.evaluations;
  j["best_performance"] = number_or_null(result.best_performance);
  j["best_config"] = config_json(result.best_config, space);
  j["space_exhausted"] = result.space_exhausted;
  j["rule_pipeline_runs"] = result.rule_pipeline_runs;
  std::size_t failed = 0;
  for (const Trial& t : result.history) failed += t.sample.failed ? 1 : 0;
  j["failed_trials"] = failed;
  Json trajectory = Json::array();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    if (result.history[i].sample.performance < best) {
      best = result.history[i].sample.performance;
      trajectory.push_back({{"evaluation", i + 1}, {"performance", best}});
    }
  }
  j["incumbent_trajectory"] = std::move(trajectory);
  Json iterations = Json::array();
  for (const IterationStats& s : result.iterations) {
    iterations.push_back({{"iteration", s.iteration},
                          {"learned", s.learned},
                          {"intermediate", s.intermediate},
                          {"purified", s.purified},
                          {"candidates", s.candidates},
                          {"fallback", s.used_fallback}});
  }
  j["iterations"] = std::move(iterations);
  j["final_rules"] = rules_to_json(result.final_rules, space);
  return j;
}

Json causal_report_to_json(const CausalReport& report, std::span<const Rule> rules,
                           const ConfigSpace& space) {
  Json j;
  j["fci_nodes"] = report.fci_nodes;
  j["fci_edges"] = report.fci_edges;
  j["ci_tests"] = report.ci_tests;
  j["guard_dropped"] = report.guard_dropped;
  Json entries = Json::array();
  for (std::size_t i = 0; i < report.rules.size(); ++i) {
    const RuleCausality& rc = report.rules[i];
    Json e;
    if (i < rules.size()) e["rule"] = rule_to_json(rules[i], space);
    e["screened"] = rc.screened;
    e["connected_to_p"] = rc.connected_to_p;
    e["theta"] = rc.theta ? number_or_null(*rc.theta) : Json(nullptr);
    e["kept"] = rc.kept;
    entries.push_back(std::move(e));
  }
  j["rules"] = std::move(entries);
  j["pag"] = report.pag;
  return j;
}

Json explanation_to_json(const ExplanationReport& report, const ConfigSpace& space) {
  Json j;
  j["k"] = report.k;
  j["explainable_rules"] = rules_to_json(report.explainable_rules, space);
  Json options = Json::array();
  for (const auto& o : report.important_options) {
    options.push_back({{"option", o.option}, {"rules", o.rules}});
  }
  j["important_options"] = std::move(options);
  Json interactions = Json::array();
  for (const auto& i : report.interactions) {
    interactions.push_back({{"options", {i.first, i.second}}, {"rules", i.rules}});
  }
  j["interactions"] = std::move(interactions);
  Json regions = Json::array();
  for (const auto& r : report.promising_regions) {
    regions.push_back({{"region", rule_to_json(r.region, space)}, {"support", r.support}});
  }
  j["promising_regions"] = std::move(regions);
  return j;
}

}  // namespace promisetune
