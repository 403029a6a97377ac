#pragma once

// Accident-sequence enumeration and bow-tie composition.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "riskforge/fault_tree.hpp"
#include "riskforge/model.hpp"

namespace riskforge::eta {

struct PathStep {
  std::string condition;
  bool success = true;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// One root-to-outcome path. `value` is a probability, or a frequency in
/// events per year when `frequency` is set.
struct SequenceOutcome {
  std::vector<PathStep> path;
  std::string outcome;
  double value = 0.0;
  bool frequency = false;
  SeverityValue severity;
};

/// Point value of the tree's initiator (mean of a distribution).
double point_initiator(const EventTree& tree);

/// Point success probability of every node, indexed like EventTree::nodes.
std::vector<double> point_success(const EventTree& tree);

/// Depth-first, success branch first. Throws StructureError when the tree
/// has no initiator, no nodes, or a node is reachable twice.
std::vector<SequenceOutcome> enumerate_sequences(const EventTree& tree);

/// Same traversal with explicit numbers; `success[i]` belongs to nodes[i].
std::vector<SequenceOutcome> enumerate_sequences(const EventTree& tree, double initiating, bool frequency,
                                                 std::span<const double> success);

/// Sums sequence values per outcome id.
std::map<std::string, double> outcome_frequencies(std::span<const SequenceOutcome> sequences);

enum class ComposeMode { Exact, RareEvent };

std::string_view to_string(ComposeMode mode);

struct ComposedBowTie {
  EventTree tree;  // consequence tree with the initiator filled in
  ComposeMode mode = ComposeMode::Exact;
  double top_probability = 0.0;
};

/// Computes the cause tree's top probability (exact within the exact-mode
/// cap, rare-event bound beyond it) and installs it as the consequence
/// tree's initiating probability.
ComposedBowTie compose_bowtie(const BowTie& bowtie, const ScenarioModel& model, const fta::Limits& limits = {});

/// The mode compose_bowtie would use for a cause tree with `events` basic events.
ComposeMode compose_mode(std::size_t events, const fta::Limits& limits);

}  // namespace riskforge::eta
