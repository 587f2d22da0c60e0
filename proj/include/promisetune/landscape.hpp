#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "promisetune/rules.hpp"
#include "promisetune/space.hpp"
#include "promisetune/tuner.hpp"

namespace promisetune {

enum class LandscapeKind { rugged_wells, deceptive, flat };

LandscapeKind parse_landscape_kind(const std::string& text);
std::string to_string(LandscapeKind kind);

/// A box that lowers the objective by `depth` for every configuration inside.
struct Well {
  Rule box;
  double depth = 0.0;
};

/// Noise-free synthetic landscape: a separable plateau function (each option
/// contributes a random step function) minus the depth of every well that
/// contains the configuration. The optimum is known exactly.
class SyntheticLandscape {
 public:
  SyntheticLandscape(LandscapeKind kind, ConfigSpace space,
                     std::vector<std::vector<double>> plateaus, std::vector<Well> wells,
                     double offset);

  LandscapeKind kind() const { return kind_; }
  const ConfigSpace& space() const { return space_; }
  std::span<const Well> wells() const { return wells_; }
  double evaluate(const Configuration& c) const;
  const Configuration& optimum() const { return optimum_; }
  double optimum_value() const { return optimum_value_; }
  Objective objective() const;

 private:
  void locate_optimum();

  LandscapeKind kind_;
  ConfigSpace space_;
  std::vector<std::vector<double>> plateaus_;  ///< per option, per value
  std::vector<Well> wells_;
  double offset_;
  Configuration optimum_;
  double optimum_value_ = 0.0;
};

struct LandscapeParams {
  std::size_t options = 10;
  std::size_t wells = 2;
  int integer_max = 15;  ///< integer options range over [0, integer_max]
  double plateau_scale = 1.0;  ///< each option's steps lie in [0, plateau_scale)
  double well_width = 0.5;     ///< fraction of an integer range a box spans
};

/// Builds a landscape over `params.options` options (alternating binary and
/// integer, binary first). `rugged_wells` places `params.wells` narrow deep
/// boxes; `deceptive` places a wide shallow basin and a narrow deeper box in
/// the opposite corner; `flat` is constant.
std::shared_ptr<const SyntheticLandscape> synthetic_landscape(LandscapeKind kind,
                                                              const LandscapeParams& params,
                                                              std::uint64_t seed);

}  // namespace promisetune
