#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "promisetune/causal.hpp"
#include "promisetune/explain.hpp"
#include "promisetune/rules.hpp"
#include "promisetune/space.hpp"
#include "promisetune/tuner.hpp"

namespace promisetune {

using Json = nlohmann::ordered_json;

/// {"options":[{"name":..,"kind":"binary"|"int"|"enum", "lo":..,"hi":..|"labels":[..]}]}
Json space_to_json(const ConfigSpace& space);
ConfigSpace space_from_json(const Json& j);

/// A rule is an array of {"option", "op", "value"} objects; "in" uses
/// "values". Enumerated values are written as labels.
Json rule_to_json(const Rule& rule, const ConfigSpace& space);
Rule rule_from_json(const Json& j, const ConfigSpace& space);
Json rules_to_json(std::span<const Rule> rules, const ConfigSpace& space);
RuleSet rules_from_json(const Json& j, const ConfigSpace& space);

/// Columns: iteration, one per option, performance, source. Failed trials
/// are written with performance `inf`.
std::string trials_csv(std::span<const Trial> trials, const ConfigSpace& space);
std::vector<Trial> parse_trials_csv(const std::string& text, const ConfigSpace& space);

Json result_to_json(const TunerResult& result, const ConfigSpace& space,
                    const TunerConfig& cfg);
Json causal_report_to_json(const CausalReport& report, std::span<const Rule> rules,
                           const ConfigSpace& space);
Json explanation_to_json(const ExplanationReport& report, const ConfigSpace& space);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace promisetune
