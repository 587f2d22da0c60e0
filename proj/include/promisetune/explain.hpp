#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "promisetune/rules.hpp"
#include "promisetune/space.hpp"

namespace promisetune {

struct ExplainConfig {
  double k = 10.0;           ///< top k% of measured configurations
  std::size_t min_hits = 1;  ///< top configurations a rule must fit

  void validate() const;
};

struct OptionImportance {
  std::string option;
  std::size_t rules = 0;
};

struct OptionInteraction {
  std::string first;
  std::string second;
  std::size_t rules = 0;
};

/// An overlap cell of the explainable rules. `support[i]` is the number of
/// rules covering the cell chosen for `region.constraints[i]`.
struct PromisingRegion {
  Rule region;
  std::vector<std::size_t> support;
};

struct ExplanationReport {
  double k = 10.0;
  RuleSet explainable_rules;
  std::vector<OptionImportance> important_options;
  std::vector<OptionInteraction> interactions;
  std::vector<PromisingRegion> promising_regions;
};

/// Rules fitted by at least `min_hits` of the ceil(k% * n) best samples.
RuleSet extract_explainable(std::span<const Rule> purified,
                            std::span<const Sample> samples, const ExplainConfig& cfg);

/// Options ranked by how many rules constrain them.
std::vector<OptionImportance> important_options(std::span<const Rule> rules,
                                                const ConfigSpace& space);

/// Option pairs ranked by how many rules constrain both.
std::vector<OptionInteraction> analyze_interactions(std::span<const Rule> rules,
                                                    const ConfigSpace& space);

/// Per option, the domain cells covered by the most rules; the cross product
/// of those cells gives the candidate promising regions. An option whose
/// rules never overlap stays unbounded unless no option overlaps at all.
std::vector<PromisingRegion> most_common_overlaps(std::span<const Rule> rules,
                                                  const ConfigSpace& space);

ExplanationReport explain(std::span<const Rule> purified, std::span<const Sample> samples,
                          const ConfigSpace& space, const ExplainConfig& cfg);

/// Human-readable multi-line summary.
std::string format_report(const ExplanationReport& report, const ConfigSpace& space);

}  // namespace promisetune
