#include "promisetune/scott_knott.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "promisetune/common.hpp"

namespace promisetune {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sum_sq_dev(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

struct Group {
  std::string name;
  std::vector<double> values;
  double mean = 0.0;
};

std::vector<double> pool(const std::vector<Group>& groups, std::size_t first, std::size_t last) {
  std::vector<double> out;
  for (std::size_t i = first; i < last; ++i) {
    out.insert(out.end(), groups[i].values.begin(), groups[i].values.end());
  }
  return out;
}

class Partitioner {
 public:
  Partitioner(std::vector<Group> groups, const ScottKnottConfig& cfg)
      : groups_(std::move(groups)), cfg_(cfg) {
    double within = 0.0;
    std::size_t n = 0;
    for (const Group& g : groups_) {
      within += sum_sq_dev(g.values);
      n += g.values.size();
    }
    dof_ = static_cast<double>(n - groups_.size());
    mse_ = dof_ > 0.0 ? within / dof_ : 0.0;
    mean_size_ = static_cast<double>(n) / static_cast<double>(groups_.size());
  }

  std::vector<std::size_t> cluster_starts() {
    starts_.clear();
    split(0, groups_.size());
    std::sort(starts_.begin(), starts_.end());
    return starts_;
  }

  const std::vector<Group>& groups() const { return groups_; }

 private:
  void split(std::size_t first, std::size_t last) {
    const std::size_t k = last - first;
    if (k < 2) {
      starts_.push_back(first);
      return;
    }
    double grand = 0.0;
    for (std::size_t i = first; i < last; ++i) grand += groups_[i].mean;
    grand /= static_cast<double>(k);

    // Split of the ordered means maximizing the between-group sum of squares.
    double best = -1.0;
    std::size_t cut = first + 1;
    for (std::size_t c = first + 1; c < last; ++c) {
      double left = 0.0;
      double right = 0.0;
      for (std::size_t i = first; i < c; ++i) left += groups_[i].mean;
      for (std::size_t i = c; i < last; ++i) right += groups_[i].mean;
      const double k1 = static_cast<double>(c - first);
      const double k2 = static_cast<double>(last - c);
      left /= k1;
      right /= k2;
      const double b0 = k1 * (left - grand) * (left - grand) + k2 * (right - grand) * (right - grand);
      if (b0 > best) {
        best = b0;
        cut = c;
      }
    }

    if (significant(first, last, grand, best) &&
        cohens_d(pool(groups_, first, cut), pool(groups_, cut, last)) >= cfg_.negligible_d) {
      split(first, cut);
      split(cut, last);
    } else {
      starts_.push_back(first);
    }
  }

  bool significant(std::size_t first, std::size_t last, double grand, double b0) const {
    const double k = static_cast<double>(last - first);
    double spread = 0.0;
    for (std::size_t i = first; i < last; ++i) {
      spread += (groups_[i].mean - grand) * (groups_[i].mean - grand);
    }
    const double sigma2 = (spread + dof_ * mse_ / mean_size_) / (k + dof_);
    if (!(sigma2 > 0.0)) return b0 > 0.0;
    const double lambda = std::numbers::pi / (2.0 * (std::numbers::pi - 2.0)) * b0 / sigma2;
    const boost::math::chi_squared chi(k / (std::numbers::pi - 2.0));
    return lambda > boost::math::quantile(chi, 1.0 - cfg_.alpha);
  }

  std::vector<Group> groups_;
  ScottKnottConfig cfg_;
  double dof_ = 0.0;
  double mse_ = 0.0;
  double mean_size_ = 1.0;
  std::vector<std::size_t> starts_;
};

}  // namespace

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double diff = std::abs(mean_of(a) - mean_of(b));
  const double dof = na + nb - 2.0;
  const double pooled = dof > 0.0 ? std::sqrt((sum_sq_dev(a) + sum_sq_dev(b)) / dof) : 0.0;
  if (!(pooled > 0.0)) return diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return diff / pooled;
}

std::map<std::string, int> scott_knott_esd(
    const std::map<std::string, std::vector<double>>& groups, const ScottKnottConfig& cfg) {
  if (groups.empty()) throw Error("no groups to rank");
  std::vector<Group> ordered;
  for (const auto& [name, values] : groups) {
    if (values.size() < 2) {
      throw Error("group '" + name + "' needs at least two observations");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw Error("group '" + name + "' has a non-finite observation");
    }
    ordered.push_back({name, values, mean_of(values)});
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Group& a, const Group& b) { return a.mean < b.mean; });

  Partitioner partitioner(std::move(ordered), cfg);
  const auto starts = partitioner.cluster_starts();
  const auto& sorted = partitioner.groups();
  std::map<std::string, int> ranks;
  int rank = 0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (next < starts.size() && starts[next] == i) {
      ++rank;
      ++next;
    }
    ranks[sorted[i].name] = rank;
  }
  return ranks;
}

}  // namespace promisetune
