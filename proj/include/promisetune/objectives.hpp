#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "promisetune/space.hpp"
#include "promisetune/tuner.hpp"

namespace promisetune {

/// Measured performance for every configuration of a space, loaded from CSV.
class OfflineTable {
 public:
  OfflineTable(ConfigSpace space, std::map<Configuration, double> rows);

  const ConfigSpace& space() const { return space_; }
  std::size_t size() const { return rows_.size(); }
  const std::map<Configuration, double>& rows() const { return rows_; }
  /// Throws LoadError for a configuration missing from the table.
  double lookup(const Configuration& c) const;
  Objective objective(std::string name) const;

 private:
  ConfigSpace space_;
  std::map<Configuration, double> rows_;
};

/// Reads a CSV whose header lists option names followed by `performance`.
/// Option kinds are inferred per column: {0,1} is binary, other integers span
/// the observed range, anything else is enumerated with sorted labels. The
/// table must cover the inferred space exactly.
OfflineTable load_offline(const std::string& path);
OfflineTable parse_offline(const std::string& text);

void save_offline(const OfflineTable& table, const std::string& path);
std::string format_offline(const OfflineTable& table);

class SpawnFailure : public ObjectiveFailure {
 public:
  using ObjectiveFailure::ObjectiveFailure;
};

class TimeoutFailure : public ObjectiveFailure {
 public:
  using ObjectiveFailure::ObjectiveFailure;
};

class ParseFailure : public ObjectiveFailure {
 public:
  using ObjectiveFailure::ObjectiveFailure;
};

/// Replaces each `{option}` with the option's formatted value. Braces that do
/// not name an option are kept verbatim.
std::string substitute_template(const std::string& templ, const ConfigSpace& space,
                                const Configuration& c);

/// Runs `/bin/sh -c <command>` and captures stdout. Throws SpawnFailure,
/// TimeoutFailure (after `timeout_seconds`, 0 = none) or, for a non-zero exit,
/// SpawnFailure.
std::string run_command(const std::string& command, double timeout_seconds);

/// Objective that runs the substituted template and parses the first capture
/// group of `parser_regex` from stdout as the performance.
Objective command_objective(const std::string& templ, const std::string& parser_regex,
                            double timeout_seconds, const ConfigSpace& space);

}  // namespace promisetune
