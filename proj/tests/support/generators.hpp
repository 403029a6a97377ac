#pragma once

// Random model generators and brute-force oracles shared by the unit tests
// and the acceptance binary. Oracles work on the model types directly and do
// not call into the engines they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "riskforge/fault_tree.hpp"
#include "riskforge/model.hpp"

namespace rftest {

using namespace riskforge;

// ---------------------------------------------------------------- fault trees

/// Coherent tree over at most `max_events` basic events. Events may repeat
/// under different gates so absorption gets exercised.
inline FaultTree random_fault_tree(std::mt19937_64& rng, std::size_t max_events, int max_depth = 4) {
  std::uniform_int_distribution<std::size_t> n_dist(1, max_events);
  const std::size_t n = n_dist(rng);
  FaultTree ft;
  ft.id = "T";
  for (std::size_t i = 0; i < n; ++i) {
    ft.events.push_back(BasicEvent{"E" + std::to_string(i), UncertainQuantity::point(0.1), false});
  }
  std::uniform_int_distribution<int> kids(1, 4);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::bernoulli_distribution coin(0.5);
  auto build = [&](auto&& self, int depth) -> std::size_t {
    const std::size_t g = ft.gates.size();
    ft.gates.push_back(Gate{coin(rng) ? GateKind::And : GateKind::Or, {}});
    const int k = kids(rng);
    for (int c = 0; c < k; ++c) {
      if (depth < max_depth && std::bernoulli_distribution(0.35)(rng)) {
        const std::size_t child = self(self, depth + 1);
        ft.gates[g].children.push_back(NodeRef::gate(child));
      } else {
        ft.gates[g].children.push_back(NodeRef::event(pick(rng)));
      }
    }
    return g;
  };
  build(build, 0);
  return ft;
}

/// Events reachable from the top gate, in FaultTree::events order.
inline std::vector<std::size_t> reachable_events(const FaultTree& ft) {
  std::vector<bool> seen(ft.events.size(), false);
  auto walk = [&](auto&& self, std::size_t g) -> void {
    for (const NodeRef& c : ft.gates[g].children) {
      if (c.kind == NodeRef::Kind::Event) seen[c.index] = true;
      else self(self, c.index);
    }
  };
  walk(walk, 0);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(i);
  }
  return out;
}

/// Structure function evaluated recursively on the raw tree.
inline bool oracle_fails(const FaultTree& ft, const std::vector<bool>& failed, std::size_t g = 0) {
  const Gate& gate = ft.gates[g];
  const auto child_fails = [&](const NodeRef& c) {
    return c.kind == NodeRef::Kind::Event ? bool(failed[c.index]) : oracle_fails(ft, failed, c.index);
  };
  if (gate.kind == GateKind::And) return std::all_of(gate.children.begin(), gate.children.end(), child_fails);
  return std::any_of(gate.children.begin(), gate.children.end(), child_fails);
}

/// Minimal cut sets by scanning all 2^n states: a failing state is minimal
/// when removing any single event makes the top event succeed (enough for
/// monotone structure functions). Sorted by size, then id list.
inline std::vector<fta::CutSet> oracle_cut_sets(const FaultTree& ft) {
  const auto ev = reachable_events(ft);
  const std::size_t n = ev.size();
  std::vector<bool> failed(ft.events.size(), false);
  const auto fails_mask = [&](std::uint64_t mask) {
    for (std::size_t i = 0; i < n; ++i) failed[ev[i]] = (mask >> i) & 1U;
    return oracle_fails(ft, failed);
  };
  std::vector<fta::CutSet> out;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    if (!fails_mask(mask)) continue;
    bool minimal = true;
    for (std::size_t i = 0; i < n && minimal; ++i) {
      if (((mask >> i) & 1U) && fails_mask(mask & ~(std::uint64_t{1} << i))) minimal = false;
    }
    if (!minimal) continue;
    fta::CutSet cs;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1U) cs.events.push_back(ft.events[ev[i]].id);
    }
    std::sort(cs.events.begin(), cs.events.end());
    out.push_back(std::move(cs));
  }
  std::sort(out.begin(), out.end(), [](const fta::CutSet& a, const fta::CutSet& b) {
    if (a.events.size() != b.events.size()) return a.events.size() < b.events.size();
    return a.events < b.events;
  });
  return out;
}

/// Top probability by summing the probability of every failing state.
inline double oracle_top_probability(const FaultTree& ft, const std::map<std::string, double>& p) {
  const auto ev = reachable_events(ft);
  const std::size_t n = ev.size();
  std::vector<bool> failed(ft.events.size(), false);
  long double total = 0.0L;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    long double w = 1.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const bool f = (mask >> i) & 1U;
      failed[ev[i]] = f;
      const long double pi = p.at(ft.events[ev[i]].id);
      w *= f ? pi : 1.0L - pi;
    }
    if (oracle_fails(ft, failed)) total += w;
  }
  return static_cast<double>(total);
}

// ---------------------------------------------------------------- event trees

inline EventTree random_event_tree(std::mt19937_64& rng, int max_depth = 5) {
  EventTree et;
  et.id = "E";
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution freq(0.3);
  const bool is_freq = freq(rng);
  et.initiator = Initiator{UncertainQuantity::point(is_freq ? 5.0 * u(rng) : u(rng)), is_freq};
  int outcomes = 0;
  auto build = [&](auto&& self, int depth) -> std::size_t {
    const std::size_t n = et.nodes.size();
    et.nodes.push_back(BranchNode{"C" + std::to_string(n), UncertainQuantity::point(u(rng)), std::size_t{0}, std::size_t{0}});
    for (int side = 0; side < 2; ++side) {
      BranchChild child;
      if (depth < max_depth && u(rng) < 0.55) {
        child = self(self, depth + 1);
      } else {
        const int k = outcomes++;
        child = OutcomeLeaf{"O" + std::to_string(k % 4), SeverityValue(std::floor(100.0 * u(rng)), HarmUnit::Fatalities)};
      }
      (side == 0 ? et.nodes[n].on_success : et.nodes[n].on_failure) = child;
    }
    return n;
  };
  build(build, 0);
  return et;
}

// ---------------------------------------------------------------- Bayesian networks

/// DAG of up to `max_nodes` nodes with 2..`max_states` states each and
/// strictly positive CPT entries. Nodes are declared in shuffled order.
inline BayesNet random_bayes_net(std::mt19937_64& rng, std::size_t max_nodes, std::size_t max_states) {
  std::uniform_int_distribution<std::size_t> n_dist(1, max_nodes);
  std::uniform_int_distribution<std::size_t> s_dist(2, max_states);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const std::size_t n = n_dist(rng);
  std::vector<BnNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].id = "N" + std::to_string(i);
    const std::size_t k = s_dist(rng);
    for (std::size_t s = 0; s < k; ++s) nodes[i].states.push_back("s" + std::to_string(s));
    std::vector<std::size_t> earlier(i);
    for (std::size_t j = 0; j < i; ++j) earlier[j] = j;
    std::shuffle(earlier.begin(), earlier.end(), rng);
    const std::size_t np = std::min<std::size_t>(earlier.size(), std::uniform_int_distribution<std::size_t>(0, 3)(rng));
    for (std::size_t j = 0; j < np; ++j) nodes[i].parents.push_back(nodes[earlier[j]].id);
    // Rows for every parent-state combination.
    std::vector<std::size_t> idx(np, 0);
    while (true) {
      CptRow row;
      for (std::size_t j = 0; j < np; ++j) row.parent_states.push_back(nodes[earlier[j]].states[idx[j]]);
      double sum = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        row.probabilities.push_back(u(rng));
        sum += row.probabilities.back();
      }
      for (double& p : row.probabilities) p /= sum;
      nodes[i].cpt.push_back(std::move(row));
      std::size_t j = 0;
      while (j < np && ++idx[j] == nodes[earlier[j]].states.size()) idx[j++] = 0;
      if (j == np) break;
    }
  }
  std::shuffle(nodes.begin(), nodes.end(), rng);
  BayesNet net;
  net.id = "BN";
  net.nodes = std::move(nodes);
  return net;
}

}  // namespace rftest
