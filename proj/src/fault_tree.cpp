#include "riskforge/fault_tree.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <numeric>

namespace riskforge::fta {

namespace {

constexpr std::array<std::uint64_t, 6> kLowPatterns{
    0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
    0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL,
};

std::string gate_name(const FaultTree& tree, std::size_t g) {
  return "fault tree " + tree.id + " gate #" + std::to_string(g);
}

}  // namespace

Analyzer::Analyzer(const FaultTree& tree, Limits limits) : limits_(limits) {
  if (limits_.mcs_max_events > 64) limits_.mcs_max_events = 64;
  if (tree.gates.empty()) throw StructureError("fault tree " + tree.id + " has no top gate");

  enum class Mark { None, Active, Done };
  std::vector<Mark> mark(tree.gates.size(), Mark::None);
  std::vector<std::size_t> event_slot(tree.events.size(), SIZE_MAX);
  std::vector<bool> event_used(tree.events.size(), false);

  // Depth-first walk: detects cycles and produces a post-order.
  auto walk = [&](auto&& self, std::size_t g) -> void {
    mark[g] = Mark::Active;
    const Gate& gate = tree.gates[g];
    if (gate.children.empty()) throw StructureError(gate_name(tree, g) + " has no children");
    for (const NodeRef& c : gate.children) {
      if (c.kind == NodeRef::Kind::Event) {
        if (c.index >= tree.events.size()) throw StructureError(gate_name(tree, g) + " references a missing event");
        event_used[c.index] = true;
        continue;
      }
      if (c.index >= tree.gates.size()) throw StructureError(gate_name(tree, g) + " references a missing gate");
      if (mark[c.index] == Mark::Active) {
        throw StructureError("cyclic structure in fault tree " + tree.id + " through gate #" +
                             std::to_string(c.index));
      }
      if (mark[c.index] == Mark::None) self(self, c.index);
    }
    mark[g] = Mark::Done;
    eval_order_.push_back(g);
  };
  walk(walk, 0);

  for (std::size_t e = 0; e < tree.events.size(); ++e) {
    if (!event_used[e]) continue;
    event_slot[e] = event_ids_.size();
    event_ids_.push_back(tree.events[e].id);
  }

  gates_.resize(tree.gates.size());
  for (std::size_t g = 0; g < tree.gates.size(); ++g) {
    if (mark[g] != Mark::Done) continue;
    gates_[g].kind = tree.gates[g].kind;
    for (const NodeRef& c : tree.gates[g].children) {
      gates_[g].children.push_back(c.kind == NodeRef::Kind::Event ? NodeRef::event(event_slot[c.index]) : c);
    }
  }
}

bool Analyzer::top_fails(std::uint64_t failed) const {
  std::vector<char> value(gates_.size(), 0);
  for (std::size_t g : eval_order_) {
    const Op& op = gates_[g];
    bool v = op.kind == GateKind::And;
    for (const NodeRef& c : op.children) {
      const bool cv = c.kind == NodeRef::Kind::Event ? ((failed >> c.index) & 1U) != 0 : value[c.index] != 0;
      if (op.kind == GateKind::And) v = v && cv;
      else v = v || cv;
    }
    value[g] = v ? 1 : 0;
  }
  return value[0] != 0;
}

std::vector<std::uint64_t> Analyzer::cut_set_masks() const {
  if (event_ids_.size() > limits_.mcs_max_events) {
    throw LimitExceeded("minimal cut set analysis: " + std::to_string(event_ids_.size()) +
                            " basic events exceed the cap",
                        limits_.mcs_max_events);
  }

  struct Row {
    std::uint64_t events = 0;
    std::vector<std::size_t> pending;  // gates still to expand
  };

  std::vector<std::uint64_t> found;
  std::vector<Row> stack;
  stack.push_back(Row{0, {0}});
  std::size_t rows_seen = 0;

  const auto subsumed = [&found](std::uint64_t events) {
    return std::any_of(found.begin(), found.end(), [events](std::uint64_t f) { return (f & events) == f; });
  };
  const auto add_child = [](Row& row, const NodeRef& c) {
    if (c.kind == NodeRef::Kind::Event) {
      row.events |= std::uint64_t{1} << c.index;
    } else if (std::find(row.pending.begin(), row.pending.end(), c.index) == row.pending.end()) {
      row.pending.push_back(c.index);
    }
  };

  while (!stack.empty()) {
    Row row = std::move(stack.back());
    stack.pop_back();
    if (++rows_seen > limits_.mcs_max_rows) {
      throw LimitExceeded("minimal cut set expansion produced too many rows", limits_.mcs_max_rows);
    }
    // Any completion of this row is a superset of an already found cut set.
    if (subsumed(row.events)) continue;
    if (row.pending.empty()) {
      found.push_back(row.events);
      continue;
    }
    const std::size_t g = row.pending.back();
    row.pending.pop_back();
    const Op& op = gates_[g];
    if (op.kind == GateKind::And) {
      for (const NodeRef& c : op.children) add_child(row, c);
      stack.push_back(std::move(row));
    } else {
      // Push in reverse so the first child is expanded first.
      for (auto it = op.children.rbegin(); it != op.children.rend(); ++it) {
        Row split = row;
        add_child(split, *it);
        stack.push_back(std::move(split));
      }
    }
  }

  // Absorption: keep a set only if no smaller kept set is contained in it.
  std::sort(found.begin(), found.end(), [](std::uint64_t a, std::uint64_t b) {
    const int pa = std::popcount(a), pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  found.erase(std::unique(found.begin(), found.end()), found.end());
  std::vector<std::uint64_t> minimal;
  for (std::uint64_t m : found) {
    const bool absorbed =
        std::any_of(minimal.begin(), minimal.end(), [m](std::uint64_t k) { return (k & m) == k; });
    if (!absorbed) minimal.push_back(m);
  }

  // Deterministic order by cardinality, then by sorted id list.
  std::vector<std::pair<CutSet, std::uint64_t>> keyed;
  keyed.reserve(minimal.size());
  for (std::uint64_t m : minimal) keyed.emplace_back(to_cut_sets(std::span(&m, 1)).front(), m);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first.events.size() != b.first.events.size()) return a.first.events.size() < b.first.events.size();
    return a.first.events < b.first.events;
  });
  std::vector<std::uint64_t> out;
  out.reserve(keyed.size());
  for (auto& [cs, m] : keyed) out.push_back(m);
  return out;
}

std::vector<CutSet> Analyzer::to_cut_sets(std::span<const std::uint64_t> masks) const {
  std::vector<CutSet> out;
  out.reserve(masks.size());
  for (std::uint64_t m : masks) {
    CutSet cs;
    for (std::uint64_t rest = m; rest != 0; rest &= rest - 1) {
      cs.events.push_back(event_ids_[static_cast<std::size_t>(std::countr_zero(rest))]);
    }
    std::sort(cs.events.begin(), cs.events.end());
    out.push_back(std::move(cs));
  }
  return out;
}

double Analyzer::exact(std::span<const double> probs) const {
  const std::size_t n = event_ids_.size();
  if (n > limits_.exact_max_events) {
    throw LimitExceeded("exact top probability: " + std::to_string(n) + " basic events exceed the cap",
                        limits_.exact_max_events);
  }
  if (probs.size() != n) throw DomainError("probability vector does not match the tree's basic events");

  // The lowest six events vary inside one 64-bit word; each bit is a state.
  // Higher events are constant across the word and enumerated outside.
  const std::size_t low = std::min<std::size_t>(n, 6);
  const std::size_t high = n - low;
  const std::size_t low_states = std::size_t{1} << low;

  std::array<double, 64> low_prob{};
  for (std::size_t j = 0; j < low_states; ++j) {
    double p = 1.0;
    for (std::size_t i = 0; i < low; ++i) p *= ((j >> i) & 1U) ? probs[i] : 1.0 - probs[i];
    low_prob[j] = p;
  }
  const std::uint64_t valid = low == 6 ? ~std::uint64_t{0} : (std::uint64_t{1} << low_states) - 1;

  std::vector<std::uint64_t> event_word(n);
  for (std::size_t i = 0; i < low; ++i) event_word[i] = kLowPatterns[i];
  std::vector<std::uint64_t> gate_word(gates_.size());

  double total = 0.0;
  const std::size_t high_states = std::size_t{1} << high;
  for (std::size_t h = 0; h < high_states; ++h) {
    double hp = 1.0;
    for (std::size_t k = 0; k < high; ++k) {
      const bool failed = ((h >> k) & 1U) != 0;
      event_word[low + k] = failed ? ~std::uint64_t{0} : 0;
      hp *= failed ? probs[low + k] : 1.0 - probs[low + k];
    }
    for (std::size_t g : eval_order_) {
      const Op& op = gates_[g];
      std::uint64_t w = op.kind == GateKind::And ? ~std::uint64_t{0} : 0;
      for (const NodeRef& c : op.children) {
        const std::uint64_t cw = c.kind == NodeRef::Kind::Event ? event_word[c.index] : gate_word[c.index];
        w = op.kind == GateKind::And ? (w & cw) : (w | cw);
      }
      gate_word[g] = w;
    }
    double s = 0.0;
    for (std::uint64_t bits = gate_word[0] & valid; bits != 0; bits &= bits - 1) {
      s += low_prob[static_cast<std::size_t>(std::countr_zero(bits))];
    }
    total += hp * s;
  }
  return std::clamp(total, 0.0, 1.0);
}

double Analyzer::rare(std::span<const std::uint64_t> masks, std::span<const double> probs) {
  double sum = 0.0;
  for (std::uint64_t m : masks) {
    double prod = 1.0;
    for (std::uint64_t rest = m; rest != 0; rest &= rest - 1) {
      prod *= probs[static_cast<std::size_t>(std::countr_zero(rest))];
    }
    sum += prod;
  }
  return std::min(1.0, sum);
}

std::vector<double> Analyzer::ordered(const Assignment& assignment) const {
  std::vector<double> out;
  out.reserve(event_ids_.size());
  for (const auto& id : event_ids_) {
    auto it = assignment.find(id);
    if (it == assignment.end()) throw ReferenceError("no probability assigned to basic event " + id);
    out.push_back(it->second.value());
  }
  return out;
}

std::vector<CutSet> minimal_cut_sets(const FaultTree& tree, const Limits& limits) {
  Analyzer a(tree, limits);
  return a.to_cut_sets(a.cut_set_masks());
}

ProbabilityValue top_probability_exact(const FaultTree& tree, const Assignment& assignment,
                                       const Limits& limits) {
  Analyzer a(tree, limits);
  return ProbabilityValue(a.exact(a.ordered(assignment)));
}

ProbabilityValue top_probability_rare(const FaultTree& tree, const Assignment& assignment,
                                      const Limits& limits) {
  Analyzer a(tree, limits);
  const auto probs = a.ordered(assignment);
  return ProbabilityValue(Analyzer::rare(a.cut_set_masks(), probs));
}

Assignment point_assignment(const FaultTree& tree) {
  Assignment out;
  for (const BasicEvent& e : tree.events) {
    if (!e.quantity) throw ReferenceError("basic event " + e.id + " has no probability");
    out.emplace(e.id, ProbabilityValue(std::clamp(e.quantity->mean(), 0.0, 1.0)));
  }
  return out;
}

}  // namespace riskforge::fta
