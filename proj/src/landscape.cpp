#include "promisetune/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace promisetune {

LandscapeKind parse_landscape_kind(const std::string& text) {
  if (text == "rugged-wells" || text == "rugged_wells") return LandscapeKind::rugged_wells;
  if (text == "deceptive") return LandscapeKind::deceptive;
  if (text == "flat") return LandscapeKind::flat;
  throw Error("unknown landscape kind '" + text + "'");
}

std::string to_string(LandscapeKind kind) {
  switch (kind) {
    case LandscapeKind::rugged_wells:
      return "rugged-wells";
    case LandscapeKind::deceptive:
      return "deceptive";
    case LandscapeKind::flat:
      return "flat";
  }
  return "unknown";
}

SyntheticLandscape::SyntheticLandscape(LandscapeKind kind, ConfigSpace space,
                                       std::vector<std::vector<double>> plateaus,
                                       std::vector<Well> wells, double offset)
    : kind_(kind),
      space_(std::move(space)),
      plateaus_(std::move(plateaus)),
      wells_(std::move(wells)),
      offset_(offset) {
  locate_optimum();
}

double SyntheticLandscape::evaluate(const Configuration& c) const {
  double value = offset_;
  for (std::size_t i = 0; i < space_.size(); ++i) {
    const int v = c.values[i] - space_.option(i).domain_min();
    value += plateaus_[i][static_cast<std::size_t>(v)];
  }
  for (const Well& well : wells_) {
    if (fits(c, well.box)) value -= well.depth;
  }
  return value;
}

// Minimum of the separable part over the intersection of every subset of
// wells, minus the depth of that subset. Deeper overlaps only lower the value,
// so the best subset term is attained and equals the global minimum.
void SyntheticLandscape::locate_optimum() {
  const std::size_t m = wells_.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    Configuration candidate;
    double value = offset_;
    bool empty = false;
    for (std::size_t i = 0; i < space_.size() && !empty; ++i) {
      const OptionDef& opt = space_.option(i);
      int arg = 0;
      double low = std::numeric_limits<double>::infinity();
      for (int v = opt.domain_min(); v <= opt.domain_max(); ++v) {
        bool inside = true;
        for (std::size_t w = 0; w < m; ++w) {
          if ((mask >> w & 1U) == 0) continue;
          const Constraint* c = wells_[w].box.find(i);
          if (c != nullptr && !c->admits(v)) inside = false;
        }
        const double level = plateaus_[i][static_cast<std::size_t>(v - opt.domain_min())];
        if (inside && level < low) {
          low = level;
          arg = v;
        }
      }
      if (!std::isfinite(low)) {
        empty = true;
        break;
      }
      candidate.values.push_back(arg);
      value += low;
    }
    if (empty) continue;
    for (std::size_t w = 0; w < m; ++w) {
      if (mask >> w & 1U) value -= wells_[w].depth;
    }
    if (value < best) {
      best = value;
      optimum_ = candidate;
    }
  }
  optimum_value_ = evaluate(optimum_);
}

Objective SyntheticLandscape::objective() const {
  // The objective keeps its own copy so it can outlive this landscape.
  auto self = std::make_shared<const SyntheticLandscape>(*this);
  return Objective{"synthetic:" + to_string(kind_), "synthetic landscape",
                   [self](const Configuration& c) { return self->evaluate(c); }};
}

namespace {

std::vector<double> step_function(const OptionDef& opt, double scale, Rng& rng) {
  std::uniform_real_distribution<double> level(0.0, scale);
  std::vector<double> steps(opt.domain_size());
  if (!opt.is_numeric()) {
    for (auto& s : steps) s = level(rng);
    return steps;
  }
  // A few plateaus with random breakpoints.
  std::uniform_int_distribution<std::size_t> cut(1, steps.size() - 1);
  std::vector<std::size_t> cuts{0, steps.size()};
  for (int k = 0; k < 3 && steps.size() > 1; ++k) cuts.push_back(cut(rng));
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double v = level(rng);
    for (std::size_t j = cuts[k]; j < cuts[k + 1]; ++j) steps[j] = v;
  }
  return steps;
}

Constraint interval(std::size_t option, int lo, int hi_exclusive) {
  Constraint c;
  c.option = option;
  c.interval = true;
  c.lo = lo;
  c.hi = hi_exclusive;
  return c;
}

Constraint equals(std::size_t option, int value) {
  Constraint c;
  c.option = option;
  c.interval = false;
  c.allowed = {value};
  return c;
}

Rule make_box(const ConfigSpace& space, std::vector<Constraint> constraints) {
  std::sort(constraints.begin(), constraints.end(),
            [](const Constraint& a, const Constraint& b) { return a.option < b.option; });
  return canonicalize(Rule{std::move(constraints), 0}, space);
}

}  // namespace

std::shared_ptr<const SyntheticLandscape> synthetic_landscape(LandscapeKind kind,
                                                              const LandscapeParams& params,
                                                              std::uint64_t seed) {
  if (params.options == 0) throw InvalidSpaceError("landscape needs at least one option");
  if (params.integer_max < 1) throw InvalidSpaceError("integer_max must be at least 1");
  if (!(params.plateau_scale >= 0.0)) throw Error("plateau_scale must be non-negative");
  if (!(params.well_width > 0.0 && params.well_width <= 1.0)) {
    throw Error("well_width must lie in (0, 1]");
  }
  std::vector<OptionDef> options;
  std::vector<std::size_t> binaries;
  std::vector<std::size_t> integers;
  for (std::size_t i = 0; i < params.options; ++i) {
    if (i % 2 == 0) {
      options.push_back(OptionDef::binary("b" + std::to_string(i)));
      binaries.push_back(i);
    } else {
      options.push_back(OptionDef::integer("x" + std::to_string(i), 0, params.integer_max));
      integers.push_back(i);
    }
  }
  ConfigSpace space(options);
  Rng rng(seed);

  std::vector<std::vector<double>> plateaus;
  for (const auto& opt : space.options()) {
    plateaus.push_back(kind == LandscapeKind::flat ? std::vector<double>(opt.domain_size(), 0.0)
                                                   : step_function(opt, params.plateau_scale, rng));
  }

  const int span = params.integer_max + 1;
  const int width = std::clamp(static_cast<int>(std::lround(span * params.well_width)), 1, span);
  std::vector<Well> wells;
  auto pick = [&](const std::vector<std::size_t>& pool) {
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    return pool[d(rng)];
  };
  auto pick_two = [&](const std::vector<std::size_t>& pool) {
    std::vector<std::size_t> chosen{pick(pool)};
    if (pool.size() > 1) {
      std::size_t other = chosen.front();
      while (other == chosen.front()) other = pick(pool);
      chosen.push_back(other);
    }
    return chosen;
  };

  if (kind == LandscapeKind::rugged_wells) {
    std::uniform_int_distribution<int> start(0, span - width);
    std::uniform_int_distribution<int> bit(0, 1);
    for (std::size_t w = 0; w < params.wells; ++w) {
      std::vector<Constraint> box;
      if (!binaries.empty()) box.push_back(equals(pick(binaries), bit(rng)));
      if (!integers.empty()) {
        for (std::size_t opt : pick_two(integers)) {
          const int lo = start(rng);
          box.push_back(interval(opt, lo, lo + width));
        }
      }
      // Deduplicate options picked twice (small spaces).
      std::sort(box.begin(), box.end(),
                [](const Constraint& a, const Constraint& b) { return a.option < b.option; });
      box.erase(std::unique(box.begin(), box.end(),
                            [](const Constraint& a, const Constraint& b) {
                              return a.option == b.option;
                            }),
                box.end());
      wells.push_back({make_box(space, box), 6.0 - 2.0 * static_cast<double>(w) /
                                                    static_cast<double>(params.wells)});
    }
  } else if (kind == LandscapeKind::deceptive) {
    // Wide basin in the low corner of two integer options.
    std::vector<Constraint> basin;
    std::vector<Constraint> needle;
    const auto axes = integers.empty() ? std::vector<std::size_t>{} : pick_two(integers);
    for (std::size_t opt : axes) {
      basin.push_back(interval(opt, 0, span / 2));
      needle.push_back(interval(opt, span - width, span));
    }
    if (!binaries.empty()) needle.push_back(equals(pick(binaries), 1));
    if (basin.empty()) basin.push_back(equals(binaries.front(), 0));
    wells.push_back({make_box(space, basin), 3.0});
    wells.push_back({make_box(space, needle), 8.0});
  }

  const double offset = 10.0;
  return std::make_shared<const SyntheticLandscape>(kind, space, std::move(plateaus),
                                                    std::move(wells), offset);
}

}  // namespace promisetune
