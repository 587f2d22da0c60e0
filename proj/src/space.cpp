#include "promisetune/space.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "promisetune/rules.hpp"

namespace promisetune {

OptionDef OptionDef::binary(std::string name) {
  OptionDef def;
  def.name = std::move(name);
  def.kind = OptionKind::binary;
  return def;
}

OptionDef OptionDef::integer(std::string name, int lo, int hi) {
  OptionDef def;
  def.name = std::move(name);
  def.kind = OptionKind::integer;
  def.lo = lo;
  def.hi = hi;
  return def;
}

OptionDef OptionDef::enumerated(std::string name,
                                std::vector<std::string> labels) {
  OptionDef def;
  def.name = std::move(name);
  def.kind = OptionKind::enumerated;
  def.labels = std::move(labels);
  return def;
}

int OptionDef::domain_max() const {
  switch (kind) {
    case OptionKind::binary:
      return 1;
    case OptionKind::integer:
      return hi;
    case OptionKind::enumerated:
      return static_cast<int>(labels.size()) - 1;
  }
  return 0;
}

std::string OptionDef::format_value(int value) const {
  if (kind == OptionKind::enumerated && value >= 0 &&
      static_cast<std::size_t>(value) < labels.size()) {
    return labels[static_cast<std::size_t>(value)];
  }
  return std::to_string(value);
}

std::size_t ConfigurationHash::operator()(const Configuration& c) const noexcept {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (int v : c.values) {
    h = mix_seed(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  }
  return static_cast<std::size_t>(h);
}

ConfigSpace::ConfigSpace(std::vector<OptionDef> options)
    : options_(std::move(options)) {
  if (options_.empty()) throw InvalidSpaceError("space has no options");
  std::unordered_set<std::string> names;
  for (const auto& opt : options_) {
    if (opt.name.empty()) throw InvalidSpaceError("option with empty name");
    if (!names.insert(opt.name).second) {
      throw InvalidSpaceError("duplicate option name '" + opt.name + "'");
    }
    if (opt.kind == OptionKind::integer && opt.lo > opt.hi) {
      throw InvalidSpaceError("option '" + opt.name + "' has lo > hi");
    }
    if (opt.kind == OptionKind::enumerated) {
      std::unordered_set<std::string> labels(opt.labels.begin(),
                                             opt.labels.end());
      if (opt.labels.size() < 2 || labels.size() != opt.labels.size()) {
        throw InvalidSpaceError("option '" + opt.name +
                                "' needs at least two distinct labels");
      }
    }
  }
}

std::optional<std::size_t> ConfigSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < options_.size(); ++i) {
    if (options_[i].name == name) return i;
  }
  return std::nullopt;
}

bool ConfigSpace::contains(const Configuration& c) const {
  if (c.values.size() != options_.size()) return false;
  for (std::size_t i = 0; i < options_.size(); ++i) {
    if (!options_[i].contains(c.values[i])) return false;
  }
  return true;
}

double ConfigSpace::cardinality() const {
  double total = 1.0;
  for (const auto& opt : options_) total *= static_cast<double>(opt.domain_size());
  return total;
}

SampleSet::SampleSet(std::size_t budget, std::size_t initial_size)
    : budget_(budget), initial_size_(initial_size) {}

InsertStatus SampleSet::add_initial(Sample sample) {
  if (seen_.contains(sample.config)) return InsertStatus::redundant;
  if (initial_measured_ >= initial_size_ || initial_measured_ >= budget_) {
    return InsertStatus::over_budget;
  }
  seen_.insert(sample.config);
  samples_.push_back(std::move(sample));
  ++initial_measured_;
  return InsertStatus::inserted;
}

InsertStatus SampleSet::add(Sample sample) {
  if (seen_.contains(sample.config)) return InsertStatus::redundant;
  if (consumed_ + initial_size_ >= budget_) return InsertStatus::over_budget;
  seen_.insert(sample.config);
  samples_.push_back(std::move(sample));
  ++consumed_;
  return InsertStatus::inserted;
}

std::vector<Sample> SampleSet::finite_samples() const {
  std::vector<Sample> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) {
    if (!s.failed && std::isfinite(s.performance)) out.push_back(s);
  }
  return out;
}

std::optional<Sample> SampleSet::best() const {
  std::optional<Sample> best;
  for (const auto& s : samples_) {
    if (!best || s.performance < best->performance) best = s;
  }
  return best;
}

Configuration random_configuration(const ConfigSpace& space, Rng& rng) {
  Configuration c;
  c.values.reserve(space.size());
  for (const auto& opt : space.options()) {
    std::uniform_int_distribution<int> dist(opt.domain_min(), opt.domain_max());
    c.values.push_back(dist(rng));
  }
  return c;
}

SampleDraw random_sample(const ConfigSpace& space, std::size_t count,
                         std::uint64_t seed) {
  if (space.size() == 0) throw InvalidSpaceError("space has no options");
  constexpr int kMaxRetries = 1000;
  Rng rng(seed);
  SampleDraw draw;
  std::unordered_set<Configuration, ConfigurationHash> seen;
  int misses = 0;
  while (draw.configs.size() < count) {
    Configuration c = random_configuration(space, rng);
    if (seen.insert(c).second) {
      draw.configs.push_back(std::move(c));
      misses = 0;
    } else if (++misses >= kMaxRetries) {
      draw.exhausted = true;
      break;
    }
  }
  return draw;
}

Configuration sample_within_rule(const ConfigSpace& space, const Rule& rule,
                                 Rng& rng) {
  Configuration c;
  c.values.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const OptionDef& opt = space.option(i);
    const Constraint* constraint = rule.find(i);
    if (constraint == nullptr) {
      std::uniform_int_distribution<int> dist(opt.domain_min(), opt.domain_max());
      c.values.push_back(dist(rng));
      continue;
    }
    if (constraint->interval) {
      const double lo = std::max<double>(constraint->lo, opt.domain_min());
      const double hi = std::min<double>(constraint->hi, opt.domain_max() + 1.0);
      const int first = static_cast<int>(std::ceil(lo));
      const int last = static_cast<int>(std::ceil(hi)) - 1;
      if (first > last) {
        throw EmptyRegionError("rule admits no value of option '" + opt.name + "'");
      }
      std::uniform_int_distribution<int> dist(first, last);
      c.values.push_back(dist(rng));
    } else {
      std::vector<int> values;
      for (int v : constraint->allowed) {
        if (opt.contains(v)) values.push_back(v);
      }
      if (values.empty()) {
        throw EmptyRegionError("rule admits no value of option '" + opt.name + "'");
      }
      std::uniform_int_distribution<std::size_t> dist(0, values.size() - 1);
      c.values.push_back(values[dist(rng)]);
    }
  }
  return c;
}

std::vector<Configuration> enumerate_space(const ConfigSpace& space) {
  std::vector<Configuration> out;
  Configuration current;
  for (const auto& opt : space.options()) current.values.push_back(opt.domain_min());
  while (true) {
    out.push_back(current);
    std::size_t i = space.size();
    while (i > 0) {
      --i;
      if (current.values[i] < space.option(i).domain_max()) {
        ++current.values[i];
        break;
      }
      current.values[i] = space.option(i).domain_min();
      if (i == 0) return out;
    }
  }
}

}  // namespace promisetune
