#include "riskforge/validate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "riskforge/bayes_net.hpp"

namespace riskforge {

namespace {

void check_id(ValidationReport& r, const std::string& loc, const std::string& id) {
  if (!is_identifier(id)) r.error(loc, "invalid-id", "\"" + id + "\" is not a valid identifier");
}

template <typename Range, typename Key>
void check_duplicates(ValidationReport& r, const Range& items, const std::string& kind, Key key) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    const std::string& id = key(item);
    if (!seen.insert(id).second) r.error(kind + ":" + id, "duplicate-id", "duplicate " + kind + " id " + id);
  }
}

void check_quantity(ValidationReport& r, const std::string& loc, const UncertainQuantity& q) {
  for (const auto& msg : q.problems()) r.error(loc, "invalid-quantity", msg);
}

/// A probability-typed quantity: point values must lie in [0,1]; wider
/// distributions are truncated when sampled, which earns a warning.
void check_probability(ValidationReport& r, const std::string& loc, const UncertainQuantity& q) {
  if (!q.valid()) {
    check_quantity(r, loc, q);
    return;
  }
  if (q.is_point()) {
    const double v = q.params()[0];
    if (!(v >= 0.0 && v <= 1.0)) r.error(loc, "probability-range", "probability out of range");
    return;
  }
  const auto [lo, hi] = q.support();
  if (lo < 0.0 || hi > 1.0) {
    r.warning(loc, "truncated-support", "distribution support exceeds [0,1]; draws are truncated");
  }
}

void check_rate(ValidationReport& r, const std::string& loc, const UncertainQuantity& q) {
  if (!q.valid()) {
    check_quantity(r, loc, q);
    return;
  }
  if (q.support().first < 0.0) r.error(loc, "rate-range", "frequency must be non-negative");
}

// ---------------------------------------------------------------- fault trees

void check_fault_tree(ValidationReport& r, const FaultTree& ft) {
  const std::string base = "ftree:" + ft.id;
  check_id(r, base, ft.id);
  if (ft.gates.empty()) {
    r.error(base, "empty-tree", "fault tree has no top gate");
    return;
  }
  std::set<std::string> event_ids;
  bool any_frequency = false;
  for (const auto& e : ft.events) {
    const std::string loc = base + "/event:" + e.id;
    check_id(r, loc, e.id);
    if (!event_ids.insert(e.id).second) r.error(loc, "duplicate-id", "duplicate event id " + e.id);
    if (!e.quantity) {
      r.error(loc, "missing-quantity", "basic event has no probability");
      continue;
    }
    if (e.frequency) {
      any_frequency = true;
      check_rate(r, loc, *e.quantity);
      if (e.quantity->valid() && e.quantity->mean() > 1.0) {
        r.error(loc, "rate-range", "fault-tree gates combine rates as probabilities; rate must stay below 1/yr");
      }
    } else {
      check_probability(r, loc, *e.quantity);
    }
  }
  if (any_frequency) {
    r.warning(base, "frequency-algebra", "gates combine event rates with probability algebra");
  }

  // Structure: children in range, no cycles, no empty gates.
  enum Color { White, Grey, Black };
  std::vector<Color> color(ft.gates.size(), White);
  std::vector<bool> used(ft.events.size(), false);
  bool cyclic = false;
  auto visit = [&](auto&& self, std::size_t g) -> void {
    color[g] = Grey;
    for (const NodeRef& c : ft.gates[g].children) {
      if (c.kind == NodeRef::Kind::Event && c.index < ft.events.size()) used[c.index] = true;
      if (c.kind == NodeRef::Kind::Gate && c.index < ft.gates.size()) {
        if (color[c.index] == Grey) cyclic = true;
        else if (color[c.index] == White) self(self, c.index);
      }
    }
    color[g] = Black;
  };
  visit(visit, 0);
  if (cyclic) r.error(base, "cycle", "gate structure contains a cycle");
  for (std::size_t e = 0; e < ft.events.size(); ++e) {
    if (!used[e]) r.warning(base + "/event:" + ft.events[e].id, "unreachable-event", "event is not below the top gate");
  }

  for (std::size_t g = 0; g < ft.gates.size(); ++g) {
    const std::string loc = base + "/gate:" + std::to_string(g);
    const Gate& gate = ft.gates[g];
    if (gate.children.empty()) r.error(loc, "empty-gate", "gate has no children");
    bool has_freq = false, has_prob = false;
    for (const NodeRef& c : gate.children) {
      const std::size_t limit = c.kind == NodeRef::Kind::Gate ? ft.gates.size() : ft.events.size();
      if (c.index >= limit) {
        r.error(loc, "dangling-child", "child index " + std::to_string(c.index) + " does not exist");
        continue;
      }
      if (c.kind == NodeRef::Kind::Event && ft.events[c.index].quantity) {
        (ft.events[c.index].frequency ? has_freq : has_prob) = true;
      }
    }
    if (has_freq && has_prob) r.error(loc, "mixed-units", "gate mixes frequency and probability events");
  }
}

// ---------------------------------------------------------------- event trees

void check_event_tree(ValidationReport& r, const EventTree& et, bool used_by_bowtie) {
  const std::string base = "etree:" + et.id;
  check_id(r, base, et.id);
  if (et.initiator) {
    const std::string loc = base + "/init";
    if (et.initiator->frequency) check_rate(r, loc, et.initiator->quantity);
    else check_probability(r, loc, et.initiator->quantity);
    if (used_by_bowtie) {
      r.error(loc, "declared-initiator", "a bow-tie derives this tree's initiating value; remove init");
    }
  } else if (!used_by_bowtie) {
    r.error(base, "missing-initiator", "event tree has no initiating value and no bow-tie supplies one");
  }
  if (et.nodes.empty()) {
    r.error(base, "empty-tree", "event tree has no branch points");
    return;
  }

  std::map<std::string, const UncertainQuantity*> conditions;
  for (const BranchNode& n : et.nodes) {
    const std::string loc = base + "/branch:" + n.condition;
    check_id(r, loc, n.condition);
    check_probability(r, loc, n.success);
    auto [it, fresh] = conditions.emplace(n.condition, &n.success);
    if (!fresh && !(*it->second == n.success)) {
      r.error(loc, "condition-conflict", "condition appears with two different success probabilities");
    }
  }

  std::vector<int> reached(et.nodes.size(), 0);
  bool shared = false;
  auto walk = [&](auto&& self, std::size_t n) -> void {
    if (reached[n]++) {
      shared = true;
      return;
    }
    for (const BranchChild* child : {&et.nodes[n].on_success, &et.nodes[n].on_failure}) {
      if (const auto* idx = std::get_if<std::size_t>(child)) {
        if (*idx >= et.nodes.size()) {
          r.error(base + "/branch:" + et.nodes[n].condition, "dangling-child", "branch child does not exist");
        } else {
          self(self, *idx);
        }
      } else {
        const auto& leaf = std::get<OutcomeLeaf>(*child);
        check_id(r, base + "/outcome:" + leaf.id, leaf.id);
      }
    }
  };
  walk(walk, 0);
  if (shared) r.error(base, "not-a-tree", "a branch point is reachable along two paths");
  for (std::size_t i = 0; i < reached.size(); ++i) {
    if (!reached[i]) {
      r.error(base + "/branch:" + et.nodes[i].condition, "unreachable-branch", "branch point is unreachable");
    }
  }
}

// ---------------------------------------------------------------- the rest

void check_bowtie(ValidationReport& r, const BowTie& bt, const ScenarioModel& m) {
  const std::string loc = "bowtie:" + bt.id;
  check_id(r, loc, bt.id);
  check_id(r, loc, bt.critical_event);
  const FaultTree* ft = m.find_fault_tree(bt.fault_tree);
  const EventTree* et = m.find_event_tree(bt.event_tree);
  if (!ft) r.error(loc, "unresolved-reference", "unresolved reference " + bt.fault_tree);
  if (!et) r.error(loc, "unresolved-reference", "unresolved reference " + bt.event_tree);
  if (bt.hazard && std::none_of(m.hazards.begin(), m.hazards.end(), [&](const Hazard& h) { return h.id == *bt.hazard; })) {
    r.error(loc, "unresolved-reference", "unresolved reference " + *bt.hazard);
  }
  if (ft && et) {
    // Monte Carlo samples one variable per id across both sides.
    for (const BasicEvent& e : ft->events) {
      for (const BranchNode& n : et->nodes) {
        if (n.condition == e.id && e.quantity && !(*e.quantity == n.success)) {
          r.error(loc, "variable-clash", "event and branch condition " + e.id + " carry different quantities");
          break;
        }
      }
    }
  }
}

void check_fmeca(ValidationReport& r, const FmecaWorksheet& w) {
  const std::string base = "fmeca:" + w.id;
  check_id(r, base, w.id);
  std::set<std::string> seen;
  for (const FmecaRow& row : w.rows) {
    const std::string loc = base + "/mode:" + row.id;
    check_id(r, loc, row.id);
    if (!seen.insert(row.id).second) r.error(loc, "duplicate-id", "duplicate failure mode " + row.id);
    const std::pair<const char*, int> scores[] = {{"S", row.severity}, {"O", row.occurrence}, {"D", row.detection}};
    for (const auto& [name, v] : scores) {
      if (v < 1 || v > 10) r.error(loc, "score-range", std::string(name) + " score " + std::to_string(v) + " outside 1..10");
    }
  }
}

void check_tolerance(ValidationReport& r, const ToleranceCurve& t) {
  const std::string loc = "tolerance:" + t.id;
  check_id(r, loc, t.id);
  if (t.points.empty()) r.error(loc, "empty-curve", "tolerance curve has no points");
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const auto& p = t.points[i];
    if (!(p.severity >= 0.0) || !std::isfinite(p.severity)) r.error(loc, "severity-range", "severity must be finite and non-negative");
    if (!(p.max_exceedance >= 0.0 && p.max_exceedance <= 1.0)) {
      r.error(loc, "probability-range", "probability out of range");
    }
    if (i > 0 && !(p.severity > t.points[i - 1].severity)) {
      r.error(loc, "curve-order", "severities must strictly increase");
    }
    if (i > 0 && p.max_exceedance > t.points[i - 1].max_exceedance) {
      r.error(loc, "curve-order", "exceedance limits must not increase");
    }
  }
}

void check_kri(ValidationReport& r, const KriDefinition& k) {
  const std::string loc = "kri:" + k.id;
  check_id(r, loc, k.id);
  if (!std::isfinite(k.threshold)) r.error(loc, "threshold", "threshold must be finite");
}

void check_dsa(ValidationReport& r, const DesignBasisCheck& d, const ScenarioModel& m) {
  const std::string loc = "dsa:" + d.id;
  check_id(r, loc, d.id);
  const FaultTree* ft = m.find_fault_tree(d.scenario);
  const EventTree* et = m.find_event_tree(d.scenario);
  if (const BowTie* bt = m.find_bowtie(d.scenario)) {
    ft = m.find_fault_tree(bt->fault_tree);
    et = m.find_event_tree(bt->event_tree);
    if (!ft || !et) return;  // reported on the bow-tie
  }
  if (!ft && !et) {
    r.error(loc, "unresolved-reference", "unresolved reference " + d.scenario);
    return;
  }
  for (const DsaOverride& o : d.overrides) {
    const std::string oloc = loc + "/override:" + o.target;
    const bool is_event = ft && ft->find_event(o.target).has_value();
    const bool is_condition =
        et && std::any_of(et->nodes.begin(), et->nodes.end(), [&](const BranchNode& n) { return n.condition == o.target; });
    if (!is_event && !is_condition) r.error(oloc, "unresolved-reference", "unresolved reference " + o.target);
    if (o.kind == DsaOverride::Kind::SetProbability && !(o.probability >= 0.0 && o.probability <= 1.0)) {
      r.error(oloc, "probability-range", "probability out of range");
    }
  }
  const bool frequency = et ? (ft ? std::any_of(ft->events.begin(), ft->events.end(), [](const BasicEvent& e) { return e.frequency; })
                                  : et->initiator && et->initiator->frequency)
                            : false;
  switch (d.metric) {
    case DsaMetric::TopProbability:
      if (!ft) r.error(loc, "metric-mismatch", "top metric needs a fault tree or bow-tie");
      if (!(d.limit >= 0.0 && d.limit <= 1.0)) r.error(loc, "limit-range", "probability limit outside [0,1]");
      break;
    case DsaMetric::OutcomeValue: {
      if (!et) {
        r.error(loc, "metric-mismatch", "outcome metric needs an event tree or bow-tie");
        break;
      }
      bool found = false;
      for (const BranchNode& n : et->nodes) {
        for (const BranchChild* c : {&n.on_success, &n.on_failure}) {
          if (const auto* leaf = std::get_if<OutcomeLeaf>(c); leaf && leaf->id == d.outcome) found = true;
        }
      }
      if (!found) r.error(loc, "unresolved-reference", "unresolved reference " + d.outcome);
      if (!(d.limit >= 0.0) || (!frequency && d.limit > 1.0)) r.error(loc, "limit-range", "limit outside the metric's range");
      break;
    }
    case DsaMetric::Severity:
      if (!et) r.error(loc, "metric-mismatch", "severity metric needs an event tree or bow-tie");
      if (!(d.limit >= 0.0)) r.error(loc, "limit-range", "severity limit must be non-negative");
      break;
  }
}

void check_chain(ValidationReport& r, const LikelihoodChainSpec& c) {
  const std::string loc = "chain:" + c.id;
  check_id(r, loc, c.id);
  check_probability(r, loc + "/capability", c.capability);
  check_probability(r, loc + "/misuse", c.misuse);
  check_probability(r, loc + "/harm", c.harm);
}

void check_loss(ValidationReport& r, const LossModel& l) {
  const std::string loc = "loss:" + l.id;
  check_id(r, loc, l.id);
  check_quantity(r, loc + "/count", l.count);
  check_quantity(r, loc + "/severity", l.severity);
  const auto is_count = [](double v) { return v >= 0.0 && std::floor(v) == v; };
  switch (l.count.kind()) {
    case QuantityKind::Poisson: break;
    case QuantityKind::Point:
    case QuantityKind::Empirical:
      if (!std::all_of(l.count.params().begin(), l.count.params().end(), is_count)) {
        r.error(loc + "/count", "count-domain", "event counts must be non-negative integers");
      }
      break;
    default: r.error(loc + "/count", "count-domain", "event count must be a Poisson rate or an integer count");
  }
  if (l.severity.valid() && l.severity.support().first < 0.0) {
    r.error(loc + "/severity", "severity-range", "per-event severity must be non-negative");
  }
}

/// Quantifiable elements are addressed by bare id, so ids must not collide
/// across these kinds.
void check_target_ids(ValidationReport& r, const ScenarioModel& m) {
  std::map<std::string, std::vector<std::string>> kinds;
  for (const auto& x : m.fault_trees) kinds[x.id].push_back("ftree");
  for (const auto& x : m.event_trees) kinds[x.id].push_back("etree");
  for (const auto& x : m.bowties) kinds[x.id].push_back("bowtie");
  for (const auto& x : m.chains) kinds[x.id].push_back("chain");
  for (const auto& x : m.losses) kinds[x.id].push_back("loss");
  for (const auto& [id, ks] : kinds) {
    std::set<std::string> distinct(ks.begin(), ks.end());
    if (distinct.size() > 1) {
      for (const auto& k : distinct) r.error(k + ":" + id, "ambiguous-id", "id " + id + " names elements of several kinds");
    }
  }
}

void attach_spans(ValidationReport& r, const ScenarioModel& m) {
  for (Finding& f : r.findings()) {
    auto it = m.spans.find(f.location);
    if (it == m.spans.end()) it = m.spans.find(f.location.substr(0, f.location.find('/')));
    if (it != m.spans.end()) {
      f.line = it->second.line;
      f.column = it->second.column;
    }
  }
}

}  // namespace

ValidationReport validate(const ScenarioModel& m) {
  ValidationReport r;
  const auto by_id = [](const auto& x) -> const std::string& { return x.id; };
  check_duplicates(r, m.hazards, "hazard", by_id);
  check_duplicates(r, m.fault_trees, "ftree", by_id);
  check_duplicates(r, m.event_trees, "etree", by_id);
  check_duplicates(r, m.bowties, "bowtie", by_id);
  check_duplicates(r, m.fmeca, "fmeca", by_id);
  check_duplicates(r, m.bayes_nets, "bnet", by_id);
  check_duplicates(r, m.tolerances, "tolerance", by_id);
  check_duplicates(r, m.kris, "kri", by_id);
  check_duplicates(r, m.dsa_checks, "dsa", by_id);
  check_duplicates(r, m.chains, "chain", by_id);
  check_duplicates(r, m.losses, "loss", by_id);
  check_target_ids(r, m);

  for (const auto& h : m.hazards) check_id(r, "hazard:" + h.id, h.id);
  for (const auto& ft : m.fault_trees) check_fault_tree(r, ft);
  std::set<std::string> consequence_trees;
  for (const auto& bt : m.bowties) consequence_trees.insert(bt.event_tree);
  for (const auto& et : m.event_trees) check_event_tree(r, et, consequence_trees.count(et.id) > 0);
  for (const auto& bt : m.bowties) check_bowtie(r, bt, m);
  for (const auto& w : m.fmeca) check_fmeca(r, w);
  for (const auto& net : m.bayes_nets) {
    check_id(r, "bnet:" + net.id, net.id);
    for (const auto& node : net.nodes) check_id(r, "bnet:" + net.id + "/node:" + node.id, node.id);
    r.merge(bn::validate_cpts(net));
  }
  for (const auto& t : m.tolerances) check_tolerance(r, t);
  for (const auto& k : m.kris) check_kri(r, k);
  for (const auto& d : m.dsa_checks) check_dsa(r, d, m);
  for (const auto& c : m.chains) check_chain(r, c);
  for (const auto& l : m.losses) check_loss(r, l);

  attach_spans(r, m);
  r.finalize();
  return r;
}

}  // namespace riskforge
