#include "riskforge/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

namespace riskforge::bn {

namespace {

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string tuple_text(const std::vector<std::string>& states) {
  std::string s = "(";
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (i) s += ", ";
    s += states[i];
  }
  return s + ")";
}

/// Node-indexed view of a network that has passed validation.
struct Compiled {
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> states;
  std::vector<std::vector<std::size_t>> parents;
  std::vector<Factor> cpts;

  std::size_t index(std::string_view id) const {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw ReferenceError("unknown Bayesian-network node " + std::string(id));
    return static_cast<std::size_t>(it - ids.begin());
  }

  std::size_t state_index(std::size_t node, std::string_view state) const {
    const auto& s = states[node];
    auto it = std::find(s.begin(), s.end(), state);
    if (it == s.end()) throw ReferenceError("node " + ids[node] + " has no state " + std::string(state));
    return static_cast<std::size_t>(it - s.begin());
  }
};

Compiled compile(const BayesNet& net) {
  ValidationReport report = validate_cpts(net);
  if (report.has_errors()) {
    const auto& f = *std::find_if(report.findings().begin(), report.findings().end(),
                                  [](const Finding& x) { return x.level == FindingLevel::Error; });
    throw StructureError("Bayesian network " + net.id + " is invalid: " + f.location + ": " + f.message);
  }
  Compiled c;
  for (const auto& node : net.nodes) {
    c.ids.push_back(node.id);
    c.states.push_back(node.states);
  }
  for (const auto& node : net.nodes) {
    std::vector<std::size_t> ps;
    for (const auto& p : node.parents) ps.push_back(c.index(p));
    c.parents.push_back(ps);
  }
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const BnNode& node = net.nodes[i];
    // Scope is (node, parents...) in the order given; reorder to sorted scope below.
    std::vector<std::size_t> raw_scope{i};
    raw_scope.insert(raw_scope.end(), c.parents[i].begin(), c.parents[i].end());
    std::vector<std::size_t> raw_cards;
    for (std::size_t v : raw_scope) raw_cards.push_back(c.states[v].size());
    const std::size_t total = std::accumulate(raw_cards.begin(), raw_cards.end(), std::size_t{1}, std::multiplies<>());

    Factor f;
    f.scope = raw_scope;
    std::sort(f.scope.begin(), f.scope.end());
    for (std::size_t v : f.scope) f.cards.push_back(c.states[v].size());
    f.values.assign(total, 0.0);
    std::vector<std::size_t> stride(c.ids.size(), 0);
    std::size_t s = 1;
    for (std::size_t k = 0; k < f.scope.size(); ++k) {
      stride[f.scope[k]] = s;
      s *= f.cards[k];
    }
    for (const CptRow& row : node.cpt) {
      std::size_t base = 0;
      for (std::size_t k = 0; k < row.parent_states.size(); ++k) {
        const std::size_t pv = c.parents[i][k];
        base += stride[pv] * c.state_index(pv, row.parent_states[k]);
      }
      for (std::size_t x = 0; x < row.probabilities.size(); ++x) f.values[base + stride[i] * x] = row.probabilities[x];
    }
    c.cpts.push_back(std::move(f));
  }
  return c;
}

Posterior run_elimination(const Compiled& c, std::size_t target, const std::map<std::size_t, std::size_t>& ev,
                          const std::vector<std::size_t>& order) {
  std::vector<Factor> factors;
  for (Factor f : c.cpts) {
    for (const auto& [var, state] : ev) {
      if (std::find(f.scope.begin(), f.scope.end(), var) != f.scope.end()) f = reduce(f, var, state);
    }
    factors.push_back(std::move(f));
  }
  for (std::size_t var : order) {
    Factor product{{}, {}, {1.0}};
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (std::find(f.scope.begin(), f.scope.end(), var) != f.scope.end()) product = multiply(product, f);
      else rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(product, var));
    factors = std::move(rest);
  }
  Factor result{{}, {}, {1.0}};
  for (const auto& f : factors) result = multiply(result, f);
  // Only the target may remain in scope.
  for (std::size_t v : std::vector<std::size_t>(result.scope)) {
    if (v != target) result = sum_out(result, v);
  }
  Posterior post;
  post.node = c.ids[target];
  post.states = c.states[target];
  if (result.scope.empty()) {
    // Target is disconnected from every factor: cannot happen since its CPT holds it.
    throw StructureError("target vanished during elimination");
  }
  const double z = std::accumulate(result.values.begin(), result.values.end(), 0.0);
  if (!(z > 0.0)) throw InconsistentEvidence("evidence has zero probability under network");
  for (double v : result.values) post.probabilities.push_back(v / z);
  return post;
}

std::map<std::size_t, std::size_t> compile_evidence(const Compiled& c, std::size_t target, const Evidence& evidence) {
  std::map<std::size_t, std::size_t> ev;
  for (const auto& [node, state] : evidence) {
    const std::size_t v = c.index(node);
    if (v == target) throw DomainError("query target " + node + " is also given as evidence");
    ev[v] = c.state_index(v, state);
  }
  return ev;
}

std::vector<std::size_t> min_fill_order(const Compiled& c, std::size_t target, const std::map<std::size_t, std::size_t>& ev) {
  const std::size_t n = c.ids.size();
  std::vector<std::set<std::size_t>> adj(n);
  std::vector<bool> active(n, true);
  for (const auto& [v, s] : ev) active[v] = false;
  for (const Factor& f : c.cpts) {
    for (std::size_t a : f.scope) {
      for (std::size_t b : f.scope) {
        if (a != b && active[a] && active[b]) adj[a].insert(b);
      }
    }
  }
  std::vector<std::size_t> order;
  std::vector<bool> done(n, false);
  for (;;) {
    std::optional<std::size_t> best;
    std::size_t best_fill = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (!active[v] || done[v] || v == target) continue;
      std::size_t fill = 0;
      std::vector<std::size_t> nb(adj[v].begin(), adj[v].end());
      for (std::size_t i = 0; i < nb.size(); ++i) {
        for (std::size_t j = i + 1; j < nb.size(); ++j) {
          if (!adj[nb[i]].count(nb[j])) ++fill;
        }
      }
      if (!best || fill < best_fill || (fill == best_fill && c.ids[v] < c.ids[*best])) {
        best = v;
        best_fill = fill;
      }
    }
    if (!best) break;
    const std::size_t v = *best;
    std::vector<std::size_t> nb(adj[v].begin(), adj[v].end());
    for (std::size_t a : nb) {
      for (std::size_t b : nb) {
        if (a != b) adj[a].insert(b);
      }
      adj[a].erase(v);
    }
    adj[v].clear();
    done[v] = true;
    order.push_back(v);
  }
  return order;
}

}  // namespace

std::size_t Factor::size() const {
  return std::accumulate(cards.begin(), cards.end(), std::size_t{1}, std::multiplies<>());
}

Factor multiply(const Factor& a, const Factor& b) {
  Factor r;
  std::set_union(a.scope.begin(), a.scope.end(), b.scope.begin(), b.scope.end(), std::back_inserter(r.scope));
  const auto card_of = [&](std::size_t v) {
    for (std::size_t k = 0; k < a.scope.size(); ++k) if (a.scope[k] == v) return a.cards[k];
    for (std::size_t k = 0; k < b.scope.size(); ++k) if (b.scope[k] == v) return b.cards[k];
    return std::size_t{1};
  };
  const auto stride_in = [](const Factor& f, std::size_t v) {
    std::size_t s = 1;
    for (std::size_t k = 0; k < f.scope.size(); ++k) {
      if (f.scope[k] == v) return s;
      s *= f.cards[k];
    }
    return std::size_t{0};
  };
  std::vector<std::size_t> sa, sb;
  for (std::size_t v : r.scope) {
    r.cards.push_back(card_of(v));
    sa.push_back(stride_in(a, v));
    sb.push_back(stride_in(b, v));
  }
  const std::size_t total = r.size();
  r.values.resize(total);
  std::vector<std::size_t> assign(r.scope.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < total; ++i) {
    r.values[i] = a.values[ia] * b.values[ib];
    for (std::size_t k = 0; k < assign.size(); ++k) {
      ++assign[k];
      ia += sa[k];
      ib += sb[k];
      if (assign[k] < r.cards[k]) break;
      ia -= sa[k] * r.cards[k];
      ib -= sb[k] * r.cards[k];
      assign[k] = 0;
    }
  }
  return r;
}

Factor sum_out(const Factor& f, std::size_t var) {
  auto pos = std::find(f.scope.begin(), f.scope.end(), var);
  if (pos == f.scope.end()) return f;
  const auto k = static_cast<std::size_t>(pos - f.scope.begin());
  Factor r;
  std::size_t inner = 1;
  for (std::size_t j = 0; j < f.scope.size(); ++j) {
    if (j < k) inner *= f.cards[j];
    if (j == k) continue;
    r.scope.push_back(f.scope[j]);
    r.cards.push_back(f.cards[j]);
  }
  const std::size_t card = f.cards[k];
  const std::size_t outer = f.values.size() / (inner * card);
  r.values.assign(inner * outer, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t x = 0; x < card; ++x) {
      for (std::size_t i = 0; i < inner; ++i) {
        r.values[o * inner + i] += f.values[(o * card + x) * inner + i];
      }
    }
  }
  return r;
}

Factor reduce(const Factor& f, std::size_t var, std::size_t state) {
  auto pos = std::find(f.scope.begin(), f.scope.end(), var);
  if (pos == f.scope.end()) return f;
  const auto k = static_cast<std::size_t>(pos - f.scope.begin());
  Factor r;
  std::size_t inner = 1;
  for (std::size_t j = 0; j < f.scope.size(); ++j) {
    if (j < k) inner *= f.cards[j];
    if (j == k) continue;
    r.scope.push_back(f.scope[j]);
    r.cards.push_back(f.cards[j]);
  }
  const std::size_t card = f.cards[k];
  const std::size_t outer = f.values.size() / (inner * card);
  r.values.resize(inner * outer);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) r.values[o * inner + i] = f.values[(o * card + state) * inner + i];
  }
  return r;
}

double Posterior::operator[](std::string_view state) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == state) return probabilities[i];
  }
  throw ReferenceError("node " + node + " has no state " + std::string(state));
}

ValidationReport validate_cpts(const BayesNet& net, std::optional<std::string> location) {
  ValidationReport report;
  const std::string base = location.value_or("bnet:" + net.id);
  std::map<std::string, const BnNode*> by_id;

  for (const BnNode& node : net.nodes) {
    const std::string loc = base + "/node:" + node.id;
    if (!by_id.emplace(node.id, &node).second) report.error(loc, "duplicate-id", "duplicate node id " + node.id);
    if (node.states.empty()) report.error(loc, "no-states", "node declares no states");
    std::set<std::string> seen;
    for (const auto& s : node.states) {
      if (!seen.insert(s).second) report.error(loc, "duplicate-state", "duplicate state " + s);
    }
  }

  bool parents_ok = true;
  for (const BnNode& node : net.nodes) {
    const std::string loc = base + "/node:" + node.id;
    std::set<std::string> seen;
    for (const auto& p : node.parents) {
      if (!by_id.count(p)) {
        report.error(loc, "unresolved-reference", "unresolved reference " + p);
        parents_ok = false;
      }
      if (!seen.insert(p).second) {
        report.error(loc, "duplicate-parent", "parent " + p + " listed twice");
        parents_ok = false;
      }
    }
  }

  // Cycle search over parent edges, visiting nodes in id order.
  if (parents_ok) {
    std::map<std::string, int> color;
    std::vector<std::string> stack;
    std::set<std::string> reported;
    auto dfs = [&](auto&& self, const std::string& id) -> void {
      color[id] = 1;
      stack.push_back(id);
      std::vector<std::string> ps = by_id[id]->parents;
      std::sort(ps.begin(), ps.end());
      for (const auto& p : ps) {
        if (color[p] == 1) {
          auto it = std::find(stack.begin(), stack.end(), p);
          std::vector<std::string> cyc(it, stack.end());
          // Edges run parent -> child, so reverse the parent-walk stack.
          std::reverse(cyc.begin(), cyc.end());
          std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
          std::string text;
          for (const auto& n : cyc) text += n + " -> ";
          text += cyc.front();
          if (reported.insert(text).second) report.error(base, "cycle", "directed cycle " + text);
        } else if (color[p] == 0) {
          self(self, p);
        }
      }
      stack.pop_back();
      color[id] = 2;
    };
    for (const auto& [id, node] : by_id) {
      if (color[id] == 0) dfs(dfs, id);
    }
  }

  for (const BnNode& node : net.nodes) {
    const std::string loc = base + "/node:" + node.id;
    const std::size_t arity = node.states.size();
    bool rows_checkable = parents_ok;
    std::set<std::vector<std::string>> keys;
    for (const CptRow& row : node.cpt) {
      const std::string rt = tuple_text(row.parent_states);
      if (row.parent_states.size() != node.parents.size()) {
        report.error(loc, "cpt-row-key", "row " + rt + " does not match parents " + tuple_text(node.parents));
        rows_checkable = false;
        continue;
      }
      if (parents_ok) {
        for (std::size_t k = 0; k < row.parent_states.size(); ++k) {
          const auto& ps = by_id[node.parents[k]]->states;
          if (std::find(ps.begin(), ps.end(), row.parent_states[k]) == ps.end()) {
            report.error(loc, "cpt-row-key", "row " + rt + ": parent " + node.parents[k] + " has no state " + row.parent_states[k]);
            rows_checkable = false;
          }
        }
      }
      if (!keys.insert(row.parent_states).second) report.error(loc, "cpt-duplicate-row", "duplicate row " + rt);
      if (row.probabilities.size() != arity) {
        report.error(loc, "cpt-row-arity", "row " + rt + " has " + std::to_string(row.probabilities.size()) +
                                               " entries for " + std::to_string(arity) + " states");
        continue;
      }
      double sum = 0.0;
      bool finite = true;
      for (double p : row.probabilities) {
        if (!std::isfinite(p) || p < 0.0) finite = false;
        sum += p;
      }
      if (!finite) {
        report.error(loc, "cpt-row-value", "row " + rt + " has a negative or non-finite entry");
      } else if (std::abs(sum - 1.0) > 1e-9) {
        report.error(loc, "cpt-row-sum", "row sums to " + short_number(sum) + " for parent states " + rt);
      }
    }
    if (!rows_checkable) continue;
    // Every parent-state combination needs a row.
    std::vector<std::size_t> idx(node.parents.size(), 0);
    for (;;) {
      std::vector<std::string> key;
      for (std::size_t k = 0; k < idx.size(); ++k) key.push_back(by_id[node.parents[k]]->states[idx[k]]);
      if (!keys.count(key)) report.error(loc, "cpt-missing-row", "missing row " + tuple_text(key));
      std::size_t k = 0;
      for (; k < idx.size(); ++k) {
        if (++idx[k] < by_id[node.parents[k]]->states.size()) break;
        idx[k] = 0;
      }
      if (k == idx.size()) break;
    }
  }
  report.finalize();
  return report;
}

std::vector<std::string> elimination_order(const BayesNet& net, std::string_view target, const Evidence& evidence) {
  const Compiled c = compile(net);
  const std::size_t t = c.index(target);
  std::vector<std::string> out;
  for (std::size_t v : min_fill_order(c, t, compile_evidence(c, t, evidence))) out.push_back(c.ids[v]);
  return out;
}

Posterior query(const BayesNet& net, std::string_view target, const Evidence& evidence) {
  const Compiled c = compile(net);
  const std::size_t t = c.index(target);
  const auto ev = compile_evidence(c, t, evidence);
  return run_elimination(c, t, ev, min_fill_order(c, t, ev));
}

Posterior query(const BayesNet& net, std::string_view target, const Evidence& evidence,
                std::span<const std::string> order) {
  const Compiled c = compile(net);
  const std::size_t t = c.index(target);
  const auto ev = compile_evidence(c, t, evidence);
  std::vector<std::size_t> ord;
  std::vector<bool> listed(c.ids.size(), false);
  for (const auto& id : order) {
    const std::size_t v = c.index(id);
    if (v == t || ev.count(v) || listed[v]) throw DomainError("invalid elimination order entry " + id);
    listed[v] = true;
    ord.push_back(v);
  }
  for (std::size_t v = 0; v < c.ids.size(); ++v) {
    if (v != t && !ev.count(v) && !listed[v]) throw DomainError("elimination order omits node " + c.ids[v]);
  }
  return run_elimination(c, t, ev, ord);
}

JointDistribution joint_enumerate(const BayesNet& net, std::size_t max_entries) {
  const Compiled c = compile(net);
  std::size_t total = 1;
  for (const auto& s : c.states) {
    total *= s.size();
    if (total > max_entries) throw LimitExceeded("joint distribution of network " + net.id + " is too large", max_entries);
  }
  JointDistribution j;
  j.nodes = c.ids;
  j.states = c.states;
  j.probabilities.assign(total, 0.0);
  std::vector<std::size_t> assign(c.ids.size(), 0);
  double z = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    double p = 1.0;
    for (const Factor& f : c.cpts) {
      std::size_t idx = 0, stride = 1;
      for (std::size_t k = 0; k < f.scope.size(); ++k) {
        idx += assign[f.scope[k]] * stride;
        stride *= f.cards[k];
      }
      p *= f.values[idx];
    }
    j.probabilities[i] = p;
    z += p;
    for (std::size_t k = 0; k < assign.size(); ++k) {
      if (++assign[k] < c.states[k].size()) break;
      assign[k] = 0;
    }
  }
  if (z > 0.0) {
    for (double& p : j.probabilities) p /= z;
  }
  return j;
}

Posterior JointDistribution::marginal(std::string_view node, const Evidence& evidence) const {
  auto it = std::find(nodes.begin(), nodes.end(), node);
  if (it == nodes.end()) throw ReferenceError("unknown Bayesian-network node " + std::string(node));
  const auto target = static_cast<std::size_t>(it - nodes.begin());
  std::vector<std::pair<std::size_t, std::size_t>> ev;
  for (const auto& [n, s] : evidence) {
    auto ni = std::find(nodes.begin(), nodes.end(), n);
    if (ni == nodes.end()) throw ReferenceError("unknown Bayesian-network node " + n);
    const auto v = static_cast<std::size_t>(ni - nodes.begin());
    auto si = std::find(states[v].begin(), states[v].end(), s);
    if (si == states[v].end()) throw ReferenceError("node " + n + " has no state " + s);
    ev.emplace_back(v, static_cast<std::size_t>(si - states[v].begin()));
  }
  Posterior post{nodes[target], states[target], std::vector<double>(states[target].size(), 0.0)};
  std::vector<std::size_t> assign(nodes.size(), 0);
  for (double p : probabilities) {
    const bool match = std::all_of(ev.begin(), ev.end(), [&](const auto& e) { return assign[e.first] == e.second; });
    if (match) post.probabilities[assign[target]] += p;
    for (std::size_t k = 0; k < assign.size(); ++k) {
      if (++assign[k] < states[k].size()) break;
      assign[k] = 0;
    }
  }
  const double z = std::accumulate(post.probabilities.begin(), post.probabilities.end(), 0.0);
  if (!(z > 0.0)) throw InconsistentEvidence("evidence has zero probability under the joint distribution");
  for (double& p : post.probabilities) p /= z;
  return post;
}

}  // namespace riskforge::bn
