#pragma once

// Minimal cut sets and top-event probability of coherent AND/OR fault trees.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "riskforge/core.hpp"
#include "riskforge/model.hpp"

namespace riskforge::fta {

struct Limits {
  /// Basic events admitted by cut-set analysis. At most 64.
  std::size_t mcs_max_events = 64;
  /// Basic events admitted by exact state enumeration (2^n states).
  std::size_t exact_max_events = 20;
  /// Intermediate MOCUS rows before giving up.
  std::size_t mcs_max_rows = 5'000'000;
};

/// Event ids sorted ascending.
struct CutSet {
  std::vector<std::string> events;

  friend bool operator==(const CutSet&, const CutSet&) = default;
  friend auto operator<=>(const CutSet&, const CutSet&) = default;
};

using Assignment = std::map<std::string, ProbabilityValue, std::less<>>;

/// Pre-processed tree: checks structure once, then answers repeated queries.
/// Only basic events reachable from the top gate take part; they are indexed
/// in their order of appearance in FaultTree::events.
class Analyzer {
 public:
  /// Throws StructureError on cycles, dangling references or empty gates.
  explicit Analyzer(const FaultTree& tree, Limits limits = {});

  const std::vector<std::string>& events() const noexcept { return event_ids_; }
  std::size_t event_count() const noexcept { return event_ids_.size(); }
  const Limits& limits() const noexcept { return limits_; }

  /// MOCUS expansion followed by absorption. Each mask has bit i set for
  /// events()[i]; ordered by cardinality, then by sorted event-id list.
  std::vector<std::uint64_t> cut_set_masks() const;
  std::vector<CutSet> to_cut_sets(std::span<const std::uint64_t> masks) const;

  /// Top-event probability by enumerating all 2^n states of independent
  /// events. `probs[i]` belongs to events()[i].
  double exact(std::span<const double> probs) const;

  /// Sum over cut sets of the product of their probabilities, capped at 1.
  static double rare(std::span<const std::uint64_t> masks, std::span<const double> probs);

  /// Probabilities in events() order taken from an id-keyed assignment.
  std::vector<double> ordered(const Assignment& assignment) const;

  /// Structure function: does the top event occur when exactly the events
  /// whose bits are set in `failed` have failed?
  bool top_fails(std::uint64_t failed) const;

 private:
  struct Op {
    GateKind kind;
    std::vector<NodeRef> children;  // event indices are remapped to compact order
  };

  Limits limits_;
  std::vector<std::string> event_ids_;
  std::vector<Op> gates_;               // compact, indexed like FaultTree::gates
  std::vector<std::size_t> eval_order_; // children before parents; top last
};

std::vector<CutSet> minimal_cut_sets(const FaultTree& tree, const Limits& limits = {});

ProbabilityValue top_probability_exact(const FaultTree& tree, const Assignment& assignment,
                                       const Limits& limits = {});

/// Upper bound on the exact top probability for coherent trees.
ProbabilityValue top_probability_rare(const FaultTree& tree, const Assignment& assignment,
                                      const Limits& limits = {});

/// Point assignment from the tree's own quantities (distributions contribute
/// their mean, clamped to [0,1]). Throws ReferenceError for events without a
/// quantity.
Assignment point_assignment(const FaultTree& tree);

}  // namespace riskforge::fta
