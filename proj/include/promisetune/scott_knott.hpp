#pragma once

#include <map>
#include <string>
#include <vector>

namespace promisetune {

struct ScottKnottConfig {
  double alpha = 0.05;           ///< significance of the lambda test
  double negligible_d = 0.2;     ///< splits below this Cohen's d are merged
};

/// Ranks groups (lower mean is better) into statistically distinct, non-
/// negligibly different clusters. Ranks start at 1 and follow mean order.
/// Throws Error when a group has fewer than two observations.
std::map<std::string, int> scott_knott_esd(const std::map<std::string, std::vector<double>>& groups,
                                           const ScottKnottConfig& cfg = {});

/// Cohen's d with pooled standard deviation; 0 when both samples are constant
/// and equal, infinite when they are constant and differ.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace promisetune
