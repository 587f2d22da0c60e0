#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include "promisetune/causal.hpp"

namespace promisetune {

Pag::Pag(std::size_t nodes) : nodes_(nodes), marks_(nodes * nodes, Mark::none) {}

void Pag::add_edge(std::size_t a, std::size_t b, Mark at_a, Mark at_b) {
  if (a == b) throw Error("self edges are not allowed");
  set_mark(b, a, at_a);
  set_mark(a, b, at_b);
}

void Pag::remove_edge(std::size_t a, std::size_t b) {
  set_mark(a, b, Mark::none);
  set_mark(b, a, Mark::none);
}

std::vector<std::size_t> Pag::neighbors(std::size_t a) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < nodes_; ++b) {
    if (adjacent(a, b)) out.push_back(b);
  }
  return out;
}

std::size_t Pag::edge_count() const {
  std::size_t count = 0;
  for (std::size_t a = 0; a < nodes_; ++a) {
    for (std::size_t b = a + 1; b < nodes_; ++b) count += adjacent(a, b) ? 1 : 0;
  }
  return count;
}

std::string Pag::to_string() const {
  auto left = [](Mark m) {
    switch (m) {
      case Mark::arrow: return '<';
      case Mark::tail: return '-';
      case Mark::circle: return 'o';
      default: return ' ';
    }
  };
  auto right = [](Mark m) {
    switch (m) {
      case Mark::arrow: return '>';
      case Mark::tail: return '-';
      case Mark::circle: return 'o';
      default: return ' ';
    }
  };
  std::ostringstream os;
  for (std::size_t a = 0; a < nodes_; ++a) {
    for (std::size_t b = a + 1; b < nodes_; ++b) {
      if (!adjacent(a, b)) continue;
      os << a << ' ' << left(mark(b, a)) << '-' << right(mark(a, b)) << ' ' << b << '\n';
    }
  }
  return os.str();
}

namespace {

/// Calls fn(subset) for every size-k subset of `pool` in lexicographic order
/// until fn returns true. Returns whether fn returned true.
template <typename Fn>
bool for_each_subset(const std::vector<std::size_t>& pool, std::size_t k, Fn&& fn) {
  if (k > pool.size()) return false;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  std::vector<std::size_t> subset(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) subset[i] = pool[idx[i]];
    if (fn(subset)) return true;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == pool.size() - k + (i - 1)) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

bool is_parent(const Pag& g, std::size_t a, std::size_t b) {
  return g.mark(a, b) == Mark::arrow && g.mark(b, a) == Mark::tail;
}

/// Edge a *-* b can be traversed from a to b on a potentially directed path.
bool potentially_directed(const Pag& g, std::size_t a, std::size_t b) {
  return g.adjacent(a, b) && g.mark(b, a) != Mark::arrow && g.mark(a, b) != Mark::tail;
}

class FciRunner {
 public:
  FciRunner(const FisherZTest& test, const FciOptions& options)
      : test_(test),
        options_(options),
        n_(test.node_count()),
        graph_(n_),
        sepsets_(n_ * n_),
        has_sepset_(n_ * n_, false) {}

  FciResult run() {
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t b = a + 1; b < n_; ++b) graph_.add_edge(a, b);
    }
    skeleton();
    orient_colliders();
    if (options_.possible_dsep && refine_possible_dsep()) orient_colliders();
    apply_rules();

    FciResult result{graph_, {}, tests_};
    result.sepsets = std::move(sepsets_);
    return result;
  }

 private:
  struct EdgeOutcome {
    bool removed = false;
    std::vector<std::size_t> sepset;
    std::size_t tests = 0;
  };

  void record_removal(std::size_t a, std::size_t b, std::vector<std::size_t> sepset) {
    graph_.remove_edge(a, b);
    sepsets_[a * n_ + b] = sepset;
    sepsets_[b * n_ + a] = std::move(sepset);
    has_sepset_[a * n_ + b] = has_sepset_[b * n_ + a] = true;
  }

  bool in_sepset(std::size_t a, std::size_t c, std::size_t b) const {
    const auto& s = sepsets_[a * n_ + c];
    return std::find(s.begin(), s.end(), b) != s.end();
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t b = a + 1; b < n_; ++b) {
        if (graph_.adjacent(a, b)) out.emplace_back(a, b);
      }
    }
    return out;
  }

  // PC-stable adjacency search: every test at one order uses the adjacency
  // snapshot taken at the start of that order.
  void skeleton() {
    const std::size_t max_order = options_.ci.max_conditioning_size;
    for (std::size_t order = 0; order <= max_order; ++order) {
      std::vector<std::vector<std::size_t>> adj(n_);
      bool any = false;
      for (std::size_t a = 0; a < n_; ++a) {
        adj[a] = graph_.neighbors(a);
        if (adj[a].size() > order) any = true;
      }
      if (!any) break;

      const auto pairs = edges();
      std::vector<EdgeOutcome> outcomes(pairs.size());
      parallel_for(pairs.size(), options_.ci.threads, [&](std::size_t e) {
        const auto [a, b] = pairs[e];
        EdgeOutcome& out = outcomes[e];
        for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
          std::vector<std::size_t> pool;
          for (std::size_t v : adj[x]) {
            if (v != y) pool.push_back(v);
          }
          const bool found = for_each_subset(pool, order, [&](const auto& subset) {
            ++out.tests;
            if (test_.test(a, b, subset).independent()) {
              out.removed = true;
              out.sepset = subset;
              return true;
            }
            return false;
          });
          if (found) break;
        }
      });
      for (std::size_t e = 0; e < pairs.size(); ++e) {
        tests_ += outcomes[e].tests;
        if (outcomes[e].removed) {
          record_removal(pairs[e].first, pairs[e].second, std::move(outcomes[e].sepset));
        }
      }
    }
  }

  void orient_colliders() {
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t b = 0; b < n_; ++b) {
        if (graph_.adjacent(a, b)) graph_.set_mark(a, b, Mark::circle);
      }
    }
    for (std::size_t b = 0; b < n_; ++b) {
      const auto nb = graph_.neighbors(b);
      for (std::size_t i = 0; i < nb.size(); ++i) {
        for (std::size_t j = i + 1; j < nb.size(); ++j) {
          const std::size_t a = nb[i];
          const std::size_t c = nb[j];
          if (graph_.adjacent(a, c)) continue;
          if (!in_sepset(a, c, b)) {
            graph_.set_mark(a, b, Mark::arrow);
            graph_.set_mark(c, b, Mark::arrow);
          }
        }
      }
    }
  }

  // Nodes reachable from x on paths whose every interior node is a collider
  // on the path or forms a triangle with its path neighbours.
  std::vector<std::size_t> possible_dsep(std::size_t x) const {
    std::vector<bool> member(n_, false);
    std::vector<bool> seen(n_ * n_, false);
    struct State {
      std::size_t prev;
      std::size_t cur;
      std::size_t length;
    };
    std::deque<State> queue;
    for (std::size_t v : graph_.neighbors(x)) {
      member[v] = true;
      seen[x * n_ + v] = true;
      queue.push_back({x, v, 1});
    }
    const std::size_t max_len = options_.pdsep_max_path_length;
    while (!queue.empty()) {
      const State s = queue.front();
      queue.pop_front();
      if (max_len != 0 && s.length >= max_len) continue;
      for (std::size_t w = 0; w < n_; ++w) {
        if (w == s.prev || w == x || !graph_.adjacent(s.cur, w)) continue;
        const bool collider = graph_.mark(s.prev, s.cur) == Mark::arrow &&
                              graph_.mark(w, s.cur) == Mark::arrow;
        if (!collider && !graph_.adjacent(s.prev, w)) continue;
        if (seen[s.cur * n_ + w]) continue;
        seen[s.cur * n_ + w] = true;
        member[w] = true;
        queue.push_back({s.cur, w, s.length + 1});
      }
    }
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < n_; ++v) {
      if (member[v]) out.push_back(v);
    }
    return out;
  }

  bool refine_possible_dsep() {
    std::vector<std::vector<std::size_t>> pdsep(n_);
    std::vector<std::vector<std::size_t>> adj(n_);
    for (std::size_t v = 0; v < n_; ++v) {
      pdsep[v] = possible_dsep(v);
      adj[v] = graph_.neighbors(v);
    }
    const auto pairs = edges();
    std::vector<EdgeOutcome> outcomes(pairs.size());
    const std::size_t max_order = options_.ci.max_conditioning_size;
    parallel_for(pairs.size(), options_.ci.threads, [&](std::size_t e) {
      const auto [a, b] = pairs[e];
      EdgeOutcome& out = outcomes[e];
      for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
        std::vector<std::size_t> pool;
        for (std::size_t v : pdsep[x]) {
          if (v != x && v != y) pool.push_back(v);
        }
        const auto& neighbours = adj[x];
        for (std::size_t order = 1; order <= max_order && !out.removed; ++order) {
          for_each_subset(pool, order, [&](const auto& subset) {
            // Subsets of the current adjacency were already tested.
            const bool within_adj = std::all_of(subset.begin(), subset.end(), [&](std::size_t v) {
              return std::binary_search(neighbours.begin(), neighbours.end(), v);
            });
            if (within_adj) return false;
            ++out.tests;
            if (test_.test(a, b, subset).independent()) {
              out.removed = true;
              out.sepset = subset;
              return true;
            }
            return false;
          });
        }
        if (out.removed) break;
      }
    });
    bool changed = false;
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      tests_ += outcomes[e].tests;
      if (outcomes[e].removed) {
        record_removal(pairs[e].first, pairs[e].second, std::move(outcomes[e].sepset));
        changed = true;
      }
    }
    return changed;
  }

  // R1: a *-> b o-* c, a and c non-adjacent  =>  b -> c.
  bool rule1() {
    bool changed = false;
    for (std::size_t b = 0; b < n_; ++b) {
      for (std::size_t a = 0; a < n_; ++a) {
        if (!graph_.adjacent(a, b) || graph_.mark(a, b) != Mark::arrow) continue;
        for (std::size_t c = 0; c < n_; ++c) {
          if (c == a || !graph_.adjacent(b, c) || graph_.adjacent(a, c)) continue;
          if (graph_.mark(c, b) != Mark::circle) continue;
          graph_.set_mark(c, b, Mark::tail);
          graph_.set_mark(b, c, Mark::arrow);
          changed = true;
        }
      }
    }
    return changed;
  }

  // R2: a -> b *-> c or a *-> b -> c, with a *-o c  =>  a *-> c.
  bool rule2() {
    bool changed = false;
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t c = 0; c < n_; ++c) {
        if (!graph_.adjacent(a, c) || graph_.mark(a, c) != Mark::circle) continue;
        for (std::size_t b = 0; b < n_; ++b) {
          if (b == a || b == c || !graph_.adjacent(a, b) || !graph_.adjacent(b, c)) continue;
          const bool first = is_parent(graph_, a, b) && graph_.mark(b, c) == Mark::arrow;
          const bool second = graph_.mark(a, b) == Mark::arrow && is_parent(graph_, b, c);
          if (first || second) {
            graph_.set_mark(a, c, Mark::arrow);
            changed = true;
            break;
          }
        }
      }
    }
    return changed;
  }

  // R3: a *-> b <-* c, a *-o d o-* c, a and c non-adjacent, d *-o b
  //     =>  d *-> b.
  bool rule3() {
    bool changed = false;
    for (std::size_t b = 0; b < n_; ++b) {
      for (std::size_t d = 0; d < n_; ++d) {
        if (!graph_.adjacent(d, b) || graph_.mark(d, b) != Mark::circle) continue;
        bool oriented = false;
        for (std::size_t a = 0; a < n_ && !oriented; ++a) {
          if (a == b || a == d || graph_.mark(a, b) != Mark::arrow) continue;
          if (!graph_.adjacent(a, d) || graph_.mark(a, d) != Mark::circle) continue;
          for (std::size_t c = a + 1; c < n_; ++c) {
            if (c == b || c == d || graph_.mark(c, b) != Mark::arrow) continue;
            if (graph_.adjacent(a, c)) continue;
            if (!graph_.adjacent(c, d) || graph_.mark(c, d) != Mark::circle) continue;
            graph_.set_mark(d, b, Mark::arrow);
            changed = oriented = true;
            break;
          }
        }
      }
    }
    return changed;
  }

  // Searches backwards from a for the far end d of a discriminating path
  // <d, ..., a, b, c> for b. Returns n_ when none exists.
  std::size_t discriminating_end(std::size_t a, std::size_t b, std::size_t c) const {
    std::vector<bool> visited(n_, false);
    visited[a] = visited[b] = visited[c] = true;
    std::deque<std::size_t> queue{a};
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      for (std::size_t u = 0; u < n_; ++u) {
        if (visited[u] || !graph_.adjacent(u, v) || graph_.mark(u, v) != Mark::arrow) continue;
        if (!graph_.adjacent(u, c)) return u;
        if (is_parent(graph_, u, c) && graph_.mark(v, u) == Mark::arrow) {
          visited[u] = true;
          queue.push_back(u);
        }
      }
    }
    return n_;
  }

  // R4: discriminating path <d, ..., a, b, c> for b with b o-* c.
  bool rule4() {
    bool changed = false;
    for (std::size_t b = 0; b < n_; ++b) {
      for (std::size_t c = 0; c < n_; ++c) {
        if (!graph_.adjacent(b, c) || graph_.mark(c, b) != Mark::circle) continue;
        for (std::size_t a = 0; a < n_; ++a) {
          if (a == b || a == c || !graph_.adjacent(a, b)) continue;
          if (graph_.mark(b, a) != Mark::arrow || !is_parent(graph_, a, c)) continue;
          const std::size_t d = discriminating_end(a, b, c);
          if (d == n_) continue;
          if (in_sepset(d, c, b)) {
            graph_.set_mark(b, c, Mark::arrow);
            graph_.set_mark(c, b, Mark::tail);
          } else {
            graph_.set_mark(a, b, Mark::arrow);
            graph_.set_mark(b, a, Mark::arrow);
            graph_.set_mark(b, c, Mark::arrow);
            graph_.set_mark(c, b, Mark::arrow);
          }
          changed = true;
          break;
        }
      }
    }
    return changed;
  }

  // R8: a -> b -> c or a -o b -> c, with a o-> c  =>  a -> c.
  bool rule8() {
    bool changed = false;
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t c = 0; c < n_; ++c) {
        if (!graph_.adjacent(a, c) || graph_.mark(a, c) != Mark::arrow ||
            graph_.mark(c, a) != Mark::circle) {
          continue;
        }
        for (std::size_t b = 0; b < n_; ++b) {
          if (b == a || b == c || !is_parent(graph_, b, c) || !graph_.adjacent(a, b)) continue;
          const bool directed = is_parent(graph_, a, b);
          const bool circle_tail =
              graph_.mark(b, a) == Mark::circle && graph_.mark(a, b) == Mark::tail;
          if (directed || circle_tail) {
            graph_.set_mark(c, a, Mark::tail);
            changed = true;
            break;
          }
        }
      }
    }
    return changed;
  }

  // First nodes mu (neighbours of a) of uncovered potentially directed paths
  // from a to target that avoid `avoid`.
  std::vector<std::size_t> uncovered_pd_starts(std::size_t a, std::size_t target,
                                               std::size_t avoid) const {
    std::vector<std::size_t> starts;
    for (std::size_t mu = 0; mu < n_; ++mu) {
      if (mu == a || mu == avoid || !potentially_directed(graph_, a, mu)) continue;
      if (mu == target) {
        starts.push_back(mu);
        continue;
      }
      std::vector<bool> seen(n_ * n_, false);
      std::deque<std::pair<std::size_t, std::size_t>> queue{{a, mu}};
      seen[a * n_ + mu] = true;
      bool reached = false;
      while (!queue.empty() && !reached) {
        const auto [prev, cur] = queue.front();
        queue.pop_front();
        for (std::size_t next = 0; next < n_; ++next) {
          if (next == prev || next == a || next == avoid) continue;
          if (!potentially_directed(graph_, cur, next) || graph_.adjacent(prev, next)) continue;
          if (next == target) {
            reached = true;
            break;
          }
          if (seen[cur * n_ + next]) continue;
          seen[cur * n_ + next] = true;
          queue.emplace_back(cur, next);
        }
      }
      if (reached) starts.push_back(mu);
    }
    return starts;
  }

  // R9: a o-> c with an uncovered potentially directed path <a, b, ..., c>
  //     where b and c are non-adjacent  =>  a -> c.
  bool rule9() {
    bool changed = false;
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t c = 0; c < n_; ++c) {
        if (!graph_.adjacent(a, c) || graph_.mark(a, c) != Mark::arrow ||
            graph_.mark(c, a) != Mark::circle) {
          continue;
        }
        for (std::size_t b : uncovered_pd_starts(a, c, n_)) {
          if (b == c || graph_.adjacent(b, c)) continue;
          graph_.set_mark(c, a, Mark::tail);
          changed = true;
          break;
        }
      }
    }
    return changed;
  }

  // R10: a o-> c, b -> c <- d, uncovered p.d. paths from a to b and to d whose
  //      first nodes are distinct and non-adjacent  =>  a -> c.
  bool rule10() {
    bool changed = false;
    for (std::size_t a = 0; a < n_; ++a) {
      for (std::size_t c = 0; c < n_; ++c) {
        if (!graph_.adjacent(a, c) || graph_.mark(a, c) != Mark::arrow ||
            graph_.mark(c, a) != Mark::circle) {
          continue;
        }
        std::vector<std::size_t> parents;
        for (std::size_t v = 0; v < n_; ++v) {
          if (v != a && is_parent(graph_, v, c)) parents.push_back(v);
        }
        bool oriented = false;
        for (std::size_t i = 0; i < parents.size() && !oriented; ++i) {
          const auto first = uncovered_pd_starts(a, parents[i], c);
          if (first.empty()) continue;
          for (std::size_t j = i + 1; j < parents.size() && !oriented; ++j) {
            const auto second = uncovered_pd_starts(a, parents[j], c);
            for (std::size_t mu : first) {
              for (std::size_t omega : second) {
                if (mu != omega && !graph_.adjacent(mu, omega)) {
                  oriented = true;
                  break;
                }
              }
              if (oriented) break;
            }
          }
        }
        if (oriented) {
          graph_.set_mark(c, a, Mark::tail);
          changed = true;
        }
      }
    }
    return changed;
  }

  void apply_rules() {
    bool changed = true;
    while (changed) {
      changed = false;
      changed |= rule1();
      changed |= rule2();
      changed |= rule3();
      changed |= rule4();
      if (changed) continue;
      changed |= rule8();
      changed |= rule9();
      changed |= rule10();
    }
  }

  const FisherZTest& test_;
  const FciOptions& options_;
  std::size_t n_;
  Pag graph_;
  std::vector<std::vector<std::size_t>> sepsets_;
  std::vector<bool> has_sepset_;
  std::size_t tests_ = 0;
};

}  // namespace

FciResult fci(const FisherZTest& test, const FciOptions& options) {
  options.ci.validate();
  if (test.node_count() < 2) throw Error("FCI needs at least two nodes");
  return FciRunner(test, options).run();
}

}  // namespace promisetune
