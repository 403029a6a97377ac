#pragma once

// Deterministic design-basis checks, tolerance-curve comparison, KRI
// monitoring and conjugate Beta updates.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskforge/core.hpp"
#include "riskforge/fault_tree.hpp"
#include "riskforge/model.hpp"
#include "riskforge/quant.hpp"

namespace riskforge::eval {

struct CheckResult {
  std::string id;
  bool pass = false;
  double measured = 0.0;
  DsaMetric metric = DsaMetric::TopProbability;
  std::string outcome;
  Comparator comparator = Comparator::LessEqual;
  double limit = 0.0;
  /// "exact" or "rare-event" when a fault tree was quantified.
  std::string mode;
};

/// Point-mode evaluation after the check's worst-case overrides. Setting a
/// probability applies to a fault-tree event (failure probability) or a
/// branch condition (success probability); force-fail sets an event to 1
/// and a condition's success to 0.
///
/// The severity metric is the largest outcome severity reached with
/// non-zero probability.
CheckResult dsa_check(const DesignBasisCheck& check, const ScenarioModel& model, const fta::Limits& limits = {});

struct Violation {
  double severity = 0.0;
  double profile = 0.0;
  double tolerance = 0.0;
};

struct ToleranceResult {
  std::string tolerance;
  bool acceptable = true;
  std::optional<double> first_violation;
  std::vector<Violation> violations;
};

/// Tolerance curve read as a right-continuous step: 1 (no constraint)
/// below its first severity, each point's limit up to the next.
double tolerance_at(const ToleranceCurve& tolerance, double severity);

/// Compares both step functions at every severity of the union grid.
ToleranceResult compare_to_tolerance(const quant::RiskCurve& profile, const ToleranceCurve& tolerance);

/// Ids whose value strictly crosses the threshold, in definition-id order.
/// Throws ReferenceError for a value without a definition.
std::vector<std::string> kri_check(const std::map<std::string, double, std::less<>>& values,
                                   std::span<const KriDefinition> definitions);

/// beta(a, b) observed s successes in t trials -> beta(a + s, b + t - s).
UncertainQuantity update_beta(const UncertainQuantity& prior, long long successes, long long trials);

/// Copy of `model` with one named Beta quantity updated. `name` is
/// "ELEMENT/FIELD" (a fault-tree event, a branch condition, "init" of an
/// event tree, or capability/misuse/harm of a chain) or a bare field name
/// that matches exactly one quantity in the model.
ScenarioModel update_model(const ScenarioModel& model, std::string_view name, long long successes, long long trials);

struct Verdict {
  std::vector<CheckResult> checks;
  std::optional<ToleranceResult> tolerance;
  std::vector<std::string> triggered;

  bool violated() const;
};

}  // namespace riskforge::eval
