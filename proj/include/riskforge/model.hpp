#pragma once

// Scenario model: every entity the DSL can describe, as plain value types.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "riskforge/core.hpp"

namespace riskforge {

/// Position of an entity in a source document. line and column are 1-based.
struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

struct Hazard {
  std::string id;
  std::string description;

  friend bool operator==(const Hazard&, const Hazard&) = default;
};

// ---------------------------------------------------------------- fault trees

enum class GateKind { And, Or };

/// Child of a gate: either another gate or a basic event, by index.
struct NodeRef {
  enum class Kind { Gate, Event };
  Kind kind = Kind::Event;
  std::size_t index = 0;

  static NodeRef gate(std::size_t i) { return {Kind::Gate, i}; }
  static NodeRef event(std::size_t i) { return {Kind::Event, i}; }

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct Gate {
  GateKind kind = GateKind::Or;
  std::vector<NodeRef> children;

  friend bool operator==(const Gate&, const Gate&) = default;
};

/// A basic event. `frequency` marks an events-per-year rate instead of a
/// probability; such events may not share a gate with probability events.
struct BasicEvent {
  std::string id;
  std::optional<UncertainQuantity> quantity;
  bool frequency = false;

  friend bool operator==(const BasicEvent&, const BasicEvent&) = default;
};

/// Coherent AND/OR fault tree stored as an indexed graph; gates[0] is the top.
/// Documents always produce trees, but programmatic builders may share gates,
/// so engines check for cycles.
struct FaultTree {
  std::string id;
  std::vector<Gate> gates;
  std::vector<BasicEvent> events;

  std::optional<std::size_t> find_event(std::string_view event_id) const;

  friend bool operator==(const FaultTree&, const FaultTree&) = default;
};

// ---------------------------------------------------------------- event trees

struct OutcomeLeaf {
  std::string id;
  SeverityValue severity;

  friend bool operator==(const OutcomeLeaf&, const OutcomeLeaf&) = default;
};

/// Either the index of a further branch node or a terminal outcome.
using BranchChild = std::variant<std::size_t, OutcomeLeaf>;

/// Binary branch point. The failure probability is always 1 - success.
struct BranchNode {
  std::string condition;
  UncertainQuantity success;
  BranchChild on_success;
  BranchChild on_failure;

  friend bool operator==(const BranchNode&, const BranchNode&) = default;
};

/// Initiating value of an event tree: a probability or a frequency.
struct Initiator {
  UncertainQuantity quantity;
  bool frequency = false;

  friend bool operator==(const Initiator&, const Initiator&) = default;
};

/// nodes[0] is the root branch. The initiator is absent for trees that are
/// the consequence side of a bow-tie.
struct EventTree {
  std::string id;
  std::optional<Initiator> initiator;
  std::vector<BranchNode> nodes;

  friend bool operator==(const EventTree&, const EventTree&) = default;
};

struct BowTie {
  std::string id;
  std::string critical_event;
  std::string fault_tree;
  std::string event_tree;
  std::optional<std::string> hazard;

  friend bool operator==(const BowTie&, const BowTie&) = default;
};

// ---------------------------------------------------------------- FMECA

struct FmecaRow {
  std::string id;
  int severity = 1;
  int occurrence = 1;
  int detection = 1;
  std::string notes;

  friend bool operator==(const FmecaRow&, const FmecaRow&) = default;
};

struct FmecaWorksheet {
  std::string id;
  std::vector<FmecaRow> rows;

  friend bool operator==(const FmecaWorksheet&, const FmecaWorksheet&) = default;
};

// ---------------------------------------------------------------- Bayesian nets

struct CptRow {
  std::vector<std::string> parent_states;
  std::vector<double> probabilities;

  friend bool operator==(const CptRow&, const CptRow&) = default;
};

struct BnNode {
  std::string id;
  std::vector<std::string> states;
  std::vector<std::string> parents;
  std::vector<CptRow> cpt;

  friend bool operator==(const BnNode&, const BnNode&) = default;
};

struct BayesNet {
  std::string id;
  std::vector<BnNode> nodes;

  const BnNode* find(std::string_view node_id) const;

  friend bool operator==(const BayesNet&, const BayesNet&) = default;
};

// ---------------------------------------------------------------- evaluation inputs

struct TolerancePoint {
  double severity = 0.0;
  double max_exceedance = 1.0;

  friend bool operator==(const TolerancePoint&, const TolerancePoint&) = default;
};

struct ToleranceCurve {
  std::string id;
  std::optional<HarmUnit> unit;
  std::vector<TolerancePoint> points;

  friend bool operator==(const ToleranceCurve&, const ToleranceCurve&) = default;
};

enum class KriDirection { Above, Below };

struct KriDefinition {
  std::string id;
  std::string description;
  double threshold = 0.0;
  KriDirection direction = KriDirection::Above;

  friend bool operator==(const KriDefinition&, const KriDefinition&) = default;
};

enum class DsaMetric { TopProbability, OutcomeValue, Severity };
enum class Comparator { Less, LessEqual, Greater, GreaterEqual };

std::string_view to_string(Comparator cmp);
bool compare(double measured, Comparator cmp, double limit);

/// Worst-case adjustment applied before a design-basis check: either set an
/// event's probability, or force a branch condition to fail.
struct DsaOverride {
  enum class Kind { SetProbability, ForceFailure };
  Kind kind = Kind::SetProbability;
  std::string target;
  double probability = 1.0;

  friend bool operator==(const DsaOverride&, const DsaOverride&) = default;
};

struct DesignBasisCheck {
  std::string id;
  std::string scenario;
  std::vector<DsaOverride> overrides;
  DsaMetric metric = DsaMetric::TopProbability;
  std::string outcome;  // only for DsaMetric::OutcomeValue
  Comparator comparator = Comparator::LessEqual;
  double limit = 1.0;

  friend bool operator==(const DesignBasisCheck&, const DesignBasisCheck&) = default;
};

/// P(capability) x P(misuse | capability) x P(harm | misuse), each uncertain.
struct LikelihoodChainSpec {
  std::string id;
  UncertainQuantity capability;
  UncertainQuantity misuse;
  UncertainQuantity harm;

  friend bool operator==(const LikelihoodChainSpec&, const LikelihoodChainSpec&) = default;
};

/// Annual loss model: a count distribution and a per-event severity.
struct LossModel {
  std::string id;
  UncertainQuantity count;
  UncertainQuantity severity;
  HarmUnit unit = HarmUnit::MonetaryLoss;

  friend bool operator==(const LossModel&, const LossModel&) = default;
};

// ---------------------------------------------------------------- the model

struct ScenarioModel {
  std::vector<Hazard> hazards;
  std::vector<FaultTree> fault_trees;
  std::vector<EventTree> event_trees;
  std::vector<BowTie> bowties;
  std::vector<FmecaWorksheet> fmeca;
  std::vector<BayesNet> bayes_nets;
  std::vector<ToleranceCurve> tolerances;
  std::vector<KriDefinition> kris;
  std::vector<DesignBasisCheck> dsa_checks;
  std::vector<LikelihoodChainSpec> chains;
  std::vector<LossModel> losses;

  /// Source positions keyed by entity location ("ftree:TOP"). Diagnostic
  /// only: ignored by structural equality.
  std::map<std::string, SourceSpan> spans;

  const FaultTree* find_fault_tree(std::string_view id) const;
  const EventTree* find_event_tree(std::string_view id) const;
  const BowTie* find_bowtie(std::string_view id) const;
  const BayesNet* find_bayes_net(std::string_view id) const;
  const ToleranceCurve* find_tolerance(std::string_view id) const;
  const LikelihoodChainSpec* find_chain(std::string_view id) const;
  const LossModel* find_loss(std::string_view id) const;

  bool empty() const;
};

/// Canonical form: collections sorted by id, Bayesian-net nodes and CPT rows
/// sorted, fault trees re-indexed in depth-first order. Spans are dropped.
ScenarioModel canonicalize(const ScenarioModel& model);

/// Structural equality: equal canonical forms.
bool operator==(const ScenarioModel& a, const ScenarioModel& b);

}  // namespace riskforge
