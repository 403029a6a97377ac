#include "riskforge/model.hpp"

#include <algorithm>

namespace riskforge {

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, std::string_view id) {
  auto it = std::find_if(items.begin(), items.end(), [id](const T& x) { return x.id == id; });
  return it == items.end() ? nullptr : &*it;
}

template <typename T>
void sort_by_id(std::vector<T>& items) {
  std::stable_sort(items.begin(), items.end(), [](const T& a, const T& b) { return a.id < b.id; });
}

FaultTree canonical_tree(const FaultTree& tree) {
  FaultTree out;
  out.id = tree.id;
  if (tree.gates.empty()) {
    out.events = tree.events;
    return out;
  }
  std::vector<std::optional<std::size_t>> gate_map(tree.gates.size());
  std::vector<std::optional<std::size_t>> event_map(tree.events.size());

  // Preorder numbering; a gate keeps its first position when shared.
  auto visit = [&](auto&& self, std::size_t g) -> std::size_t {
    const std::size_t mine = out.gates.size();
    gate_map[g] = mine;
    out.gates.push_back(Gate{tree.gates[g].kind, {}});
    std::vector<NodeRef> kids;
    for (const NodeRef& c : tree.gates[g].children) {
      if (c.kind == NodeRef::Kind::Event) {
        if (c.index >= tree.events.size()) continue;
        if (!event_map[c.index]) {
          event_map[c.index] = out.events.size();
          out.events.push_back(tree.events[c.index]);
        }
        kids.push_back(NodeRef::event(*event_map[c.index]));
      } else {
        if (c.index >= tree.gates.size()) continue;
        if (!gate_map[c.index]) kids.push_back(NodeRef::gate(self(self, c.index)));
        else kids.push_back(NodeRef::gate(*gate_map[c.index]));
      }
    }
    out.gates[mine].children = std::move(kids);
    return mine;
  };
  visit(visit, 0);
  for (std::size_t e = 0; e < tree.events.size(); ++e) {
    if (!event_map[e]) out.events.push_back(tree.events[e]);
  }
  return out;
}

EventTree canonical_event_tree(const EventTree& tree) {
  EventTree out{tree.id, tree.initiator, {}};
  if (tree.nodes.empty()) return out;
  std::vector<std::optional<std::size_t>> seen(tree.nodes.size());
  auto visit = [&](auto&& self, std::size_t n) -> std::size_t {
    const std::size_t mine = out.nodes.size();
    seen[n] = mine;
    out.nodes.push_back(tree.nodes[n]);
    auto remap = [&](const BranchChild& child) -> BranchChild {
      if (const auto* idx = std::get_if<std::size_t>(&child)) {
        if (*idx >= tree.nodes.size()) return child;
        if (seen[*idx]) return *seen[*idx];
        return self(self, *idx);
      }
      return child;
    };
    BranchChild s = remap(tree.nodes[n].on_success);
    BranchChild f = remap(tree.nodes[n].on_failure);
    out.nodes[mine].on_success = std::move(s);
    out.nodes[mine].on_failure = std::move(f);
    return mine;
  };
  visit(visit, 0);
  return out;
}

}  // namespace

std::optional<std::size_t> FaultTree::find_event(std::string_view event_id) const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].id == event_id) return i;
  }
  return std::nullopt;
}

const BnNode* BayesNet::find(std::string_view node_id) const { return find_by_id(nodes, node_id); }

std::string_view to_string(Comparator cmp) {
  switch (cmp) {
    case Comparator::Less: return "<";
    case Comparator::LessEqual: return "<=";
    case Comparator::Greater: return ">";
    case Comparator::GreaterEqual: return ">=";
  }
  return "<=";
}

bool compare(double measured, Comparator cmp, double limit) {
  switch (cmp) {
    case Comparator::Less: return measured < limit;
    case Comparator::LessEqual: return measured <= limit;
    case Comparator::Greater: return measured > limit;
    case Comparator::GreaterEqual: return measured >= limit;
  }
  return false;
}

const FaultTree* ScenarioModel::find_fault_tree(std::string_view id) const { return find_by_id(fault_trees, id); }
const EventTree* ScenarioModel::find_event_tree(std::string_view id) const { return find_by_id(event_trees, id); }
const BowTie* ScenarioModel::find_bowtie(std::string_view id) const { return find_by_id(bowties, id); }
const BayesNet* ScenarioModel::find_bayes_net(std::string_view id) const { return find_by_id(bayes_nets, id); }
const ToleranceCurve* ScenarioModel::find_tolerance(std::string_view id) const { return find_by_id(tolerances, id); }
const LikelihoodChainSpec* ScenarioModel::find_chain(std::string_view id) const { return find_by_id(chains, id); }
const LossModel* ScenarioModel::find_loss(std::string_view id) const { return find_by_id(losses, id); }

bool ScenarioModel::empty() const {
  return hazards.empty() && fault_trees.empty() && event_trees.empty() && bowties.empty() &&
         fmeca.empty() && bayes_nets.empty() && tolerances.empty() && kris.empty() &&
         dsa_checks.empty() && chains.empty() && losses.empty();
}

ScenarioModel canonicalize(const ScenarioModel& model) {
  ScenarioModel c = model;
  c.spans.clear();
  sort_by_id(c.hazards);
  for (auto& t : c.fault_trees) t = canonical_tree(t);
  sort_by_id(c.fault_trees);
  for (auto& t : c.event_trees) t = canonical_event_tree(t);
  sort_by_id(c.event_trees);
  sort_by_id(c.bowties);
  for (auto& w : c.fmeca) sort_by_id(w.rows);
  sort_by_id(c.fmeca);
  for (auto& net : c.bayes_nets) {
    for (auto& node : net.nodes) {
      std::stable_sort(node.cpt.begin(), node.cpt.end(), [](const CptRow& a, const CptRow& b) {
        return a.parent_states < b.parent_states;
      });
    }
    sort_by_id(net.nodes);
  }
  sort_by_id(c.bayes_nets);
  sort_by_id(c.tolerances);
  sort_by_id(c.kris);
  sort_by_id(c.dsa_checks);
  sort_by_id(c.chains);
  sort_by_id(c.losses);
  return c;
}

bool operator==(const ScenarioModel& a, const ScenarioModel& b) {
  const ScenarioModel ca = canonicalize(a);
  const ScenarioModel cb = canonicalize(b);
  return ca.hazards == cb.hazards && ca.fault_trees == cb.fault_trees &&
         ca.event_trees == cb.event_trees && ca.bowties == cb.bowties && ca.fmeca == cb.fmeca &&
         ca.bayes_nets == cb.bayes_nets && ca.tolerances == cb.tolerances && ca.kris == cb.kris &&
         ca.dsa_checks == cb.dsa_checks && ca.chains == cb.chains && ca.losses == cb.losses;
}

}  // namespace riskforge
