#include "riskforge/event_tree.hpp"

#include <algorithm>

namespace riskforge::eta {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double point_initiator(const EventTree& tree) {
  if (!tree.initiator) throw StructureError("event tree " + tree.id + " has no initiating value");
  const double v = tree.initiator->quantity.mean();
  return tree.initiator->frequency ? std::max(0.0, v) : clamp01(v);
}

std::vector<double> point_success(const EventTree& tree) {
  std::vector<double> out;
  out.reserve(tree.nodes.size());
  for (const BranchNode& node : tree.nodes) out.push_back(clamp01(node.success.mean()));
  return out;
}

std::vector<SequenceOutcome> enumerate_sequences(const EventTree& tree) {
  return enumerate_sequences(tree, point_initiator(tree), tree.initiator->frequency, point_success(tree));
}

std::vector<SequenceOutcome> enumerate_sequences(const EventTree& tree, double initiating, bool frequency,
                                                 std::span<const double> success) {
  if (tree.nodes.empty()) throw StructureError("event tree " + tree.id + " has no branch points");
  if (success.size() != tree.nodes.size()) throw DomainError("success vector does not match event tree nodes");

  std::vector<SequenceOutcome> out;
  std::vector<PathStep> path;
  std::vector<bool> visited(tree.nodes.size(), false);

  auto walk = [&](auto&& self, std::size_t n, double value) -> void {
    if (n >= tree.nodes.size()) throw StructureError("event tree " + tree.id + " references a missing node");
    if (visited[n]) throw StructureError("event tree " + tree.id + " is not a tree (node reached twice)");
    visited[n] = true;
    const BranchNode& node = tree.nodes[n];
    const double ps = success[n];
    const auto follow = [&](const BranchChild& child, bool ok, double v) {
      path.push_back(PathStep{node.condition, ok});
      if (const auto* leaf = std::get_if<OutcomeLeaf>(&child)) {
        out.push_back(SequenceOutcome{path, leaf->id, v, frequency, leaf->severity});
      } else {
        self(self, std::get<std::size_t>(child), v);
      }
      path.pop_back();
    };
    follow(node.on_success, true, value * ps);
    follow(node.on_failure, false, value * (1.0 - ps));
  };
  walk(walk, 0, initiating);
  return out;
}

std::map<std::string, double> outcome_frequencies(std::span<const SequenceOutcome> sequences) {
  std::map<std::string, double> out;
  for (const auto& s : sequences) out[s.outcome] += s.value;
  return out;
}

std::string_view to_string(ComposeMode mode) { return mode == ComposeMode::Exact ? "exact" : "rare-event"; }

ComposeMode compose_mode(std::size_t events, const fta::Limits& limits) {
  return events <= limits.exact_max_events ? ComposeMode::Exact : ComposeMode::RareEvent;
}

ComposedBowTie compose_bowtie(const BowTie& bowtie, const ScenarioModel& model, const fta::Limits& limits) {
  const FaultTree* ft = model.find_fault_tree(bowtie.fault_tree);
  if (!ft) throw ReferenceError("bow-tie " + bowtie.id + ": unresolved reference " + bowtie.fault_tree);
  const EventTree* et = model.find_event_tree(bowtie.event_tree);
  if (!et) throw ReferenceError("bow-tie " + bowtie.id + ": unresolved reference " + bowtie.event_tree);

  fta::Analyzer analyzer(*ft, limits);
  const auto probs = analyzer.ordered(fta::point_assignment(*ft));
  ComposedBowTie result;
  result.mode = compose_mode(analyzer.event_count(), limits);
  result.top_probability = result.mode == ComposeMode::Exact
                               ? analyzer.exact(probs)
                               : fta::Analyzer::rare(analyzer.cut_set_masks(), probs);
  result.tree = *et;
  const bool freq = std::any_of(ft->events.begin(), ft->events.end(), [](const BasicEvent& e) { return e.frequency; });
  result.tree.initiator = Initiator{UncertainQuantity::point(result.top_probability), freq};
  return result;
}

}  // namespace riskforge::eta
