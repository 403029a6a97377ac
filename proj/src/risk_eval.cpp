#include "riskforge/risk_eval.hpp"

#include <algorithm>
#include <cmath>

#include "riskforge/event_tree.hpp"

namespace riskforge::eval {

namespace {

struct PointScenario {
  const FaultTree* ft = nullptr;
  const EventTree* et = nullptr;
};

PointScenario resolve(const DesignBasisCheck& check, const ScenarioModel& model) {
  PointScenario s;
  if (const BowTie* bt = model.find_bowtie(check.scenario)) {
    s.ft = model.find_fault_tree(bt->fault_tree);
    s.et = model.find_event_tree(bt->event_tree);
    if (!s.ft) throw ReferenceError("unresolved reference " + bt->fault_tree);
    if (!s.et) throw ReferenceError("unresolved reference " + bt->event_tree);
    return s;
  }
  s.ft = model.find_fault_tree(check.scenario);
  s.et = model.find_event_tree(check.scenario);
  if (!s.ft && !s.et) throw ReferenceError("unresolved reference " + check.scenario);
  return s;
}

}  // namespace

CheckResult dsa_check(const DesignBasisCheck& check, const ScenarioModel& model, const fta::Limits& limits) {
  const PointScenario s = resolve(check, model);
  CheckResult r;
  r.id = check.id;
  r.metric = check.metric;
  r.outcome = check.outcome;
  r.comparator = check.comparator;
  r.limit = check.limit;

  fta::Assignment assignment;
  std::vector<double> success;
  if (s.ft) assignment = fta::point_assignment(*s.ft);
  if (s.et) success = eta::point_success(*s.et);

  for (const DsaOverride& o : check.overrides) {
    bool applied = false;
    if (s.ft && s.ft->find_event(o.target)) {
      const double p = o.kind == DsaOverride::Kind::ForceFailure ? 1.0 : o.probability;
      assignment[o.target] = ProbabilityValue(p);
      applied = true;
    }
    if (s.et) {
      for (std::size_t i = 0; i < s.et->nodes.size(); ++i) {
        if (s.et->nodes[i].condition != o.target) continue;
        success[i] = o.kind == DsaOverride::Kind::ForceFailure ? 0.0 : ProbabilityValue(o.probability).value();
        applied = true;
      }
    }
    if (!applied) throw ReferenceError("check " + check.id + ": unresolved reference " + o.target);
  }

  double top = 0.0;
  bool frequency = false;
  if (s.ft) {
    fta::Analyzer analyzer(*s.ft, limits);
    const auto probs = analyzer.ordered(assignment);
    const auto mode = eta::compose_mode(analyzer.event_count(), limits);
    r.mode = std::string(eta::to_string(mode));
    top = mode == eta::ComposeMode::Exact ? analyzer.exact(probs) : fta::Analyzer::rare(analyzer.cut_set_masks(), probs);
    frequency = std::any_of(s.ft->events.begin(), s.ft->events.end(), [](const BasicEvent& e) { return e.frequency; });
  }

  if (check.metric == DsaMetric::TopProbability) {
    if (!s.ft) throw DomainError("check " + check.id + ": top metric needs a fault tree or bow-tie");
    r.measured = top;
  } else {
    if (!s.et) throw DomainError("check " + check.id + ": metric needs an event tree or bow-tie");
    double initiating;
    if (s.ft) {
      initiating = top;
    } else {
      initiating = eta::point_initiator(*s.et);
      frequency = s.et->initiator->frequency;
    }
    const auto seqs = eta::enumerate_sequences(*s.et, initiating, frequency, success);
    if (check.metric == DsaMetric::OutcomeValue) {
      const auto totals = eta::outcome_frequencies(seqs);
      auto it = totals.find(check.outcome);
      if (it == totals.end()) throw ReferenceError("check " + check.id + ": unresolved reference " + check.outcome);
      r.measured = it->second;
    } else {
      double worst = 0.0;
      for (const auto& q : seqs) {
        if (q.value > 0.0) worst = std::max(worst, q.severity.magnitude());
      }
      r.measured = worst;
    }
  }
  r.pass = compare(r.measured, check.comparator, check.limit);
  return r;
}

double tolerance_at(const ToleranceCurve& tolerance, double severity) {
  double limit = 1.0;
  for (const auto& p : tolerance.points) {
    if (p.severity > severity) break;
    limit = p.max_exceedance;
  }
  return limit;
}

ToleranceResult compare_to_tolerance(const quant::RiskCurve& profile, const ToleranceCurve& tolerance) {
  for (std::size_t i = 0; i < tolerance.points.size(); ++i) {
    const auto& p = tolerance.points[i];
    if (!(p.max_exceedance >= 0.0 && p.max_exceedance <= 1.0) || !std::isfinite(p.severity)) {
      throw DomainError("tolerance " + tolerance.id + " has an invalid point");
    }
    if (i > 0 && (!(p.severity > tolerance.points[i - 1].severity) ||
                  p.max_exceedance > tolerance.points[i - 1].max_exceedance)) {
      throw DomainError("tolerance " + tolerance.id + " is not a non-increasing curve");
    }
  }
  std::vector<double> grid;
  for (const auto& p : profile.points()) grid.push_back(p.severity);
  for (const auto& p : tolerance.points) grid.push_back(p.severity);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  ToleranceResult r;
  r.tolerance = tolerance.id;
  for (double s : grid) {
    const double have = profile.at(s);
    const double allowed = tolerance_at(tolerance, s);
    if (have > allowed) {
      r.violations.push_back(Violation{s, have, allowed});
      if (!r.first_violation) r.first_violation = s;
    }
  }
  r.acceptable = r.violations.empty();
  return r;
}

std::vector<std::string> kri_check(const std::map<std::string, double, std::less<>>& values,
                                   std::span<const KriDefinition> definitions) {
  std::vector<const KriDefinition*> defs;
  for (const auto& d : definitions) defs.push_back(&d);
  std::sort(defs.begin(), defs.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  for (const auto& [id, v] : values) {
    if (std::none_of(defs.begin(), defs.end(), [&](const auto* d) { return d->id == id; })) {
      throw ReferenceError("no indicator definition for " + id);
    }
  }
  std::vector<std::string> out;
  for (const auto* d : defs) {
    auto it = values.find(d->id);
    if (it == values.end()) continue;
    const bool hit = d->direction == KriDirection::Above ? it->second > d->threshold : it->second < d->threshold;
    if (hit) out.push_back(d->id);
  }
  return out;
}

UncertainQuantity update_beta(const UncertainQuantity& prior, long long successes, long long trials) {
  if (prior.kind() != QuantityKind::Beta) {
    throw DomainError("conjugate update needs a beta prior, got " + std::string(to_string(prior.kind())));
  }
  if (!prior.valid()) throw DomainError("beta prior has invalid parameters");
  if (successes < 0 || trials < 0 || successes > trials) {
    throw DomainError("need 0 <= successes <= trials, got " + std::to_string(successes) + " of " + std::to_string(trials));
  }
  if (trials == 0) return prior;
  const auto a = prior.params()[0] + static_cast<double>(successes);
  const auto b = prior.params()[1] + static_cast<double>(trials - successes);
  std::string source = prior.provenance();
  if (!source.empty()) source += "; ";
  source += "updated with " + std::to_string(successes) + "/" + std::to_string(trials);
  return UncertainQuantity::beta(a, b).with_provenance(source);
}

ScenarioModel update_model(const ScenarioModel& model, std::string_view name, long long successes, long long trials) {
  std::string element, field(name);
  if (auto slash = name.find('/'); slash != std::string_view::npos) {
    element = std::string(name.substr(0, slash));
    field = std::string(name.substr(slash + 1));
  }
  ScenarioModel out = model;
  std::vector<UncertainQuantity*> hits;
  std::vector<std::string> owners;
  const auto consider = [&](const std::string& owner, const std::string& key, UncertainQuantity* q) {
    if (key != field || (!element.empty() && owner != element)) return;
    if (std::find(owners.begin(), owners.end(), owner) == owners.end()) owners.push_back(owner);
    hits.push_back(q);
  };
  for (auto& ft : out.fault_trees) {
    for (auto& e : ft.events) {
      if (e.quantity) consider(ft.id, e.id, &*e.quantity);
    }
  }
  for (auto& et : out.event_trees) {
    if (et.initiator) consider(et.id, "init", &et.initiator->quantity);
    for (auto& n : et.nodes) consider(et.id, n.condition, &n.success);
  }
  for (auto& c : out.chains) {
    consider(c.id, "capability", &c.capability);
    consider(c.id, "misuse", &c.misuse);
    consider(c.id, "harm", &c.harm);
  }
  if (hits.empty()) throw ReferenceError("no quantity named " + std::string(name));
  if (owners.size() > 1) {
    throw ReferenceError("quantity name " + std::string(name) + " is ambiguous; qualify it as ELEMENT/" + field);
  }
  // A condition repeated inside one tree is one quantity; update every copy.
  const UncertainQuantity updated = update_beta(*hits.front(), successes, trials);
  for (auto* q : hits) *q = updated;
  return out;
}

bool Verdict::violated() const {
  const bool failed = std::any_of(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.pass; });
  return failed || (tolerance && !tolerance->acceptable);
}

}  // namespace riskforge::eval
