#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "promisetune/causal.hpp"

namespace promisetune {

void CiTestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
}

namespace {

std::vector<std::vector<double>> featurized_columns(const FeaturizedSet& data) {
  std::vector<std::vector<double>> columns;
  columns.reserve(data.cols() + 1);
  for (std::size_t k = 0; k < data.cols(); ++k) columns.push_back(data.column(k));
  columns.push_back(data.performance());
  return columns;
}

}  // namespace

FisherZTest::FisherZTest(const FeaturizedSet& data, double alpha) : alpha_(alpha) {
  build(featurized_columns(data));
}

FisherZTest::FisherZTest(std::vector<std::vector<double>> columns, double alpha)
    : alpha_(alpha) {
  build(columns);
}

void FisherZTest::build(const std::vector<std::vector<double>>& columns) {
  nodes_ = columns.size();
  samples_ = columns.empty() ? 0 : columns.front().size();
  corr_.assign(nodes_ * nodes_, 0.0);
  constant_.assign(nodes_, false);

  std::vector<std::vector<double>> centered(nodes_);
  std::vector<double> norm(nodes_, 0.0);
  for (std::size_t c = 0; c < nodes_; ++c) {
    const auto& col = columns[c];
    const double mean =
        std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(samples_);
    centered[c].resize(samples_);
    for (std::size_t r = 0; r < samples_; ++r) {
      centered[c][r] = col[r] - mean;
      norm[c] += centered[c][r] * centered[c][r];
    }
    const double scale = std::max(1.0, mean * mean) * static_cast<double>(samples_);
    constant_[c] = !(norm[c] > 1e-24 * scale);
    norm[c] = std::sqrt(norm[c]);
  }
  for (std::size_t a = 0; a < nodes_; ++a) {
    corr_[a * nodes_ + a] = constant_[a] ? 0.0 : 1.0;
    for (std::size_t b = a + 1; b < nodes_; ++b) {
      double r = 0.0;
      if (!constant_[a] && !constant_[b]) {
        double dot = 0.0;
        for (std::size_t i = 0; i < samples_; ++i) dot += centered[a][i] * centered[b][i];
        r = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
      }
      corr_[a * nodes_ + b] = r;
      corr_[b * nodes_ + a] = r;
    }
  }
}

namespace {

constexpr std::size_t kSmallConditioning = 4;
using SmallMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kSmallConditioning, kSmallConditioning>;

}  // namespace

template <typename Matrix>
std::optional<double> FisherZTest::partial_correlation(
    std::size_t i, std::size_t j, const std::vector<std::size_t>& given) const {
  const auto k = static_cast<Eigen::Index>(given.size());
  Matrix s_ss(k, k);
  Matrix s_as(2, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto ga = given[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < k; ++b) {
      s_ss(a, b) = correlation(ga, given[static_cast<std::size_t>(b)]);
    }
    s_as(0, a) = correlation(i, ga);
    s_as(1, a) = correlation(j, ga);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s_ss);
  const auto& values = eig.eigenvalues();
  const double cutoff = 1e-10 * std::max(1.0, values.maxCoeff());
  Matrix scaled = eig.eigenvectors();
  for (Eigen::Index a = 0; a < k; ++a) {
    scaled.col(a) *= values(a) > cutoff ? 1.0 / values(a) : 0.0;
  }
  const Matrix pinv = scaled * eig.eigenvectors().transpose();
  Eigen::Matrix2d s_aa;
  s_aa << 1.0, correlation(i, j), correlation(i, j), 1.0;
  const Eigen::Matrix2d residual = s_aa - s_as * pinv * s_as.transpose();
  if (residual(0, 0) <= 1e-9 || residual(1, 1) <= 1e-9) return std::nullopt;
  return residual(0, 1) / std::sqrt(residual(0, 0) * residual(1, 1));
}

CiResult FisherZTest::test(std::size_t i, std::size_t j,
                           std::span<const std::size_t> cond) const {
  if (constant_[i] || constant_[j]) return {CiStatus::independent, 1.0};
  if (samples_ < cond.size() + 4) return {CiStatus::inconclusive, 0.0};

  // Drop constant conditioning columns; they explain nothing.
  std::vector<std::size_t> given;
  given.reserve(cond.size());
  for (std::size_t c : cond) {
    if (!constant_[c]) given.push_back(c);
  }

  double r = 0.0;
  if (given.empty()) {
    r = correlation(i, j);
  } else {
    const auto partial = given.size() <= kSmallConditioning
                             ? partial_correlation<SmallMatrix>(i, j, given)
                             : partial_correlation<Eigen::MatrixXd>(i, j, given);
    // Zero partial variance leaves the statistic undefined.
    if (!partial) return {CiStatus::inconclusive, 0.0};
    r = *partial;
  }

  r = std::clamp(r, -1.0 + 1e-12, 1.0 - 1e-12);
  const double dof = static_cast<double>(samples_ - given.size()) - 3.0;
  const double z = 0.5 * std::log1p(2.0 * r / (1.0 - r)) * std::sqrt(dof);
  const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return {p > alpha_ ? CiStatus::independent : CiStatus::dependent, p};
}

CiResult ci_test(const FeaturizedSet& data, std::size_t i, std::size_t j,
                 std::span<const std::size_t> cond, double alpha) {
  return FisherZTest(data, alpha).test(i, j, cond);
}

std::optional<double> average_causal_effect(const FeaturizedSet& data,
                                            std::size_t rule_index) {
  double fit_sum = 0.0;
  double violate_sum = 0.0;
  std::size_t fit_n = 0;
  std::size_t violate_n = 0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    if (data.at(r, rule_index)) {
      fit_sum += data.performance()[r];
      ++fit_n;
    } else {
      violate_sum += data.performance()[r];
      ++violate_n;
    }
  }
  if (fit_n == 0 || violate_n == 0) return std::nullopt;
  return fit_sum / static_cast<double>(fit_n) -
         violate_sum / static_cast<double>(violate_n);
}

bool possibly_directed_path(const Pag& pag, std::size_t source,
                            std::size_t target) {
  std::vector<bool> visited(pag.size(), false);
  std::vector<std::size_t> frontier{source};
  visited[source] = true;
  while (!frontier.empty()) {
    const std::size_t u = frontier.back();
    frontier.pop_back();
    if (u == target) return true;
    for (std::size_t v : pag.neighbors(u)) {
      if (visited[v]) continue;
      if (pag.mark(v, u) == Mark::arrow || pag.mark(u, v) == Mark::tail) continue;
      visited[v] = true;
      frontier.push_back(v);
    }
  }
  return false;
}

std::vector<std::size_t> connected_rules(const Pag& pag) {
  std::vector<std::size_t> out;
  if (pag.size() == 0) return out;
  const std::size_t p = pag.size() - 1;
  for (std::size_t i = 0; i < p; ++i) {
    if (possibly_directed_path(pag, i, p)) out.push_back(i);
  }
  return out;
}

RuleSet prune_disconnected(const Pag& pag, std::span<const Rule> rules) {
  RuleSet out;
  for (std::size_t i : connected_rules(pag)) {
    if (i < rules.size()) out.push_back(rules[i]);
  }
  return out;
}

PurifyResult purify(std::span<const Rule> rules, const FeaturizedSet& data,
                    const PurifyOptions& options) {
  options.ci.validate();
  if (rules.size() != data.cols()) throw Error("rules and feature columns disagree");
  PurifyResult result;
  result.report.rules.resize(rules.size());

  // Rule-count guard: keep the columns most correlated with performance.
  std::vector<std::size_t> selected(rules.size());
  std::iota(selected.begin(), selected.end(), std::size_t{0});
  if (rules.size() > options.max_rules) {
    const FisherZTest full(data, options.ci.alpha);
    const std::size_t p = data.cols();
    std::stable_sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(full.correlation(a, p)) > std::abs(full.correlation(b, p));
    });
    selected.resize(options.max_rules);
    std::sort(selected.begin(), selected.end());
    result.report.guard_dropped = rules.size() - options.max_rules;
    for (auto& entry : result.report.rules) entry.screened = false;
    for (std::size_t i : selected) result.report.rules[i].screened = true;
  }

  FeaturizedSet screened(data.rows(), selected.size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < selected.size(); ++c) {
      screened.set(r, c, data.at(r, selected[c]));
    }
  }
  screened.performance() = data.performance();

  const FisherZTest test(screened, options.ci.alpha);
  FciOptions fci_options;
  fci_options.ci = options.ci;
  fci_options.possible_dsep = options.possible_dsep;
  fci_options.pdsep_max_path_length = options.pdsep_max_path_length;
  const FciResult graph = fci(test, fci_options);
  result.report.fci_nodes = graph.pag.size();
  result.report.fci_edges = graph.pag.edge_count();
  result.report.ci_tests = graph.tests_run;
  result.report.pag = graph.pag.to_string();

  for (std::size_t i = 0; i < rules.size(); ++i) {
    result.report.rules[i].theta = average_causal_effect(data, i);
  }
  for (std::size_t local : connected_rules(graph.pag)) {
    const std::size_t original = selected[local];
    RuleCausality& entry = result.report.rules[original];
    entry.connected_to_p = true;
    result.intermediate.push_back(rules[original]);
    if (entry.theta && *entry.theta < 0.0) {
      entry.kept = true;
      result.purified.push_back(rules[original]);
    }
  }
  return result;
}

Pag fci(const FeaturizedSet& data, const CiTestConfig& cfg) {
  cfg.validate();
  const FisherZTest test(data, cfg.alpha);
  FciOptions options;
  options.ci = cfg;
  return fci(test, options).pag;
}

}  // namespace promisetune
