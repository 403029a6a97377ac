#include "riskforge/report.hpp"

namespace riskforge::report {

namespace {

std::string_view metric_name(DsaMetric m) {
  switch (m) {
    case DsaMetric::TopProbability: return "top";
    case DsaMetric::OutcomeValue: return "outcome";
    case DsaMetric::Severity: return "severity";
  }
  return "top";
}

}  // namespace

Json to_json(const ValidationReport& report) {
  Json out = Json::array();
  for (const Finding& f : report.findings()) {
    Json j;
    j["level"] = to_string(f.level);
    j["location"] = f.location;
    j["code"] = f.code;
    j["message"] = f.message;
    if (f.line > 0) {
      j["line"] = f.line;
      j["column"] = f.column;
    }
    out.push_back(std::move(j));
  }
  return out;
}

Json to_json(std::span<const fta::CutSet> cut_sets) {
  Json out = Json::array();
  for (const auto& cs : cut_sets) out.push_back(cs.events);
  return out;
}

Json to_json(std::span<const eta::SequenceOutcome> sequences) {
  Json out = Json::array();
  for (const auto& s : sequences) {
    Json path = Json::array();
    for (const auto& step : s.path) {
      path.push_back(Json{{"condition", step.condition}, {"state", step.success ? "success" : "failure"}});
    }
    Json j;
    j["path"] = std::move(path);
    j["outcome"] = s.outcome;
    j[s.frequency ? "frequency" : "probability"] = s.value;
    j["severity"] = s.severity.magnitude();
    j["unit"] = to_string(s.severity.unit());
    out.push_back(std::move(j));
  }
  return out;
}

Json to_json(const bn::Posterior& posterior) {
  Json dist;
  for (std::size_t i = 0; i < posterior.states.size(); ++i) dist[posterior.states[i]] = posterior.probabilities[i];
  return Json{{"node", posterior.node}, {"distribution", std::move(dist)}};
}

Json to_json(const quant::RiskCurve& curve) {
  Json out = Json::array();
  for (const auto& p : curve.points()) out.push_back(Json::array({p.severity, p.exceedance}));
  return out;
}

Json to_json(const quant::Summary& s) {
  return Json{{"n", s.n}, {"mean", s.mean}, {"std_error", s.std_error}, {"p05", s.p05}, {"p50", s.p50}, {"p95", s.p95}};
}

Json to_json(const quant::RiskProfile& p) {
  Json j;
  j["target"] = p.target;
  j["kind"] = quant::to_string(p.kind);
  j["seed"] = p.seed;
  j["trials"] = p.samples.size();
  if (!p.mode.empty()) j["mode"] = p.mode;
  j["value"] = p.kind == quant::ElementKind::Loss                                             ? "annual-loss"
               : p.kind == quant::ElementKind::EventTree || p.kind == quant::ElementKind::BowTie ? "expected-harm"
               : p.frequency                                                                   ? "frequency"
                                                                                               : "probability";
  j["summary"] = to_json(p.summary);
  j["truncated"] = p.truncated;
  if (p.unit) j["unit"] = to_string(*p.unit);
  if (!p.mean_curve.empty()) {
    Json curves;
    curves["mean"] = to_json(p.mean_curve);
    if (!p.p05_curve.empty()) {
      curves["p05"] = to_json(p.p05_curve);
      curves["p50"] = to_json(p.p50_curve);
      curves["p95"] = to_json(p.p95_curve);
    }
    j["curves"] = std::move(curves);
  }
  return j;
}

Json to_json(const eval::CheckResult& c) {
  Json j;
  j["id"] = c.id;
  j["result"] = c.pass ? "pass" : "fail";
  j["metric"] = metric_name(c.metric);
  if (c.metric == DsaMetric::OutcomeValue) j["outcome"] = c.outcome;
  j["measured"] = c.measured;
  j["comparator"] = to_string(c.comparator);
  j["limit"] = c.limit;
  if (!c.mode.empty()) j["mode"] = c.mode;
  return j;
}

Json to_json(const eval::ToleranceResult& r) {
  Json j;
  j["tolerance"] = r.tolerance;
  j["result"] = r.acceptable ? "acceptable" : "exceeded";
  j["first_violation"] = r.first_violation ? Json(*r.first_violation) : Json(nullptr);
  Json v = Json::array();
  for (const auto& x : r.violations) {
    v.push_back(Json{{"severity", x.severity}, {"profile", x.profile}, {"tolerance", x.tolerance}});
  }
  j["violations"] = std::move(v);
  return j;
}

Json to_json(const eval::Verdict& verdict) {
  Json j;
  j["verdict"] = verdict.violated() ? "violated" : "satisfied";
  Json checks = Json::array();
  for (const auto& c : verdict.checks) checks.push_back(to_json(c));
  j["dsa"] = std::move(checks);
  j["tolerance"] = verdict.tolerance ? to_json(*verdict.tolerance) : Json(nullptr);
  j["kri_triggered"] = verdict.triggered;
  return j;
}

std::string curve_csv(const quant::RiskCurve& curve) {
  std::string out = "severity,exceedance\n";
  for (const auto& p : curve.points()) out += format_number(p.severity) + "," + format_number(p.exceedance) + "\n";
  return out;
}

std::string dump(const Json& value) { return value.dump() + "\n"; }

}  // namespace riskforge::report
