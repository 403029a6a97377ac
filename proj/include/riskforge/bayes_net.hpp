#pragma once

// Discrete Bayesian networks: CPT validation, exact inference by variable
// elimination, and full joint enumeration for small nets.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskforge/core.hpp"
#include "riskforge/model.hpp"

namespace riskforge::bn {

/// Evidence has zero probability under the network.
class InconsistentEvidence : public Error {
 public:
  using Error::Error;
};

/// Non-negative table over the joint states of `scope`. Variables are node
/// indices; the first scope variable varies fastest in `values`.
struct Factor {
  std::vector<std::size_t> scope;
  std::vector<std::size_t> cards;
  std::vector<double> values;

  std::size_t size() const;
};

Factor multiply(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, std::size_t var);
Factor reduce(const Factor& f, std::size_t var, std::size_t state);

struct Posterior {
  std::string node;
  std::vector<std::string> states;
  std::vector<double> probabilities;

  double operator[](std::string_view state) const;
};

using Evidence = std::map<std::string, std::string, std::less<>>;

/// Findings for duplicate or dangling declarations, cycles, missing or
/// duplicated CPT rows, wrong row arity and rows not summing to 1 (1e-9).
/// `location` prefixes every finding (default "bnet:<id>").
ValidationReport validate_cpts(const BayesNet& net, std::optional<std::string> location = std::nullopt);

/// Nodes to eliminate for this query, chosen by the min-fill heuristic with
/// lexicographic tie-break on node id.
std::vector<std::string> elimination_order(const BayesNet& net, std::string_view target, const Evidence& evidence);

/// P(target | evidence) by variable elimination with the min-fill order.
Posterior query(const BayesNet& net, std::string_view target, const Evidence& evidence = {});

/// Same, eliminating in the given order. The order must list every node
/// other than the target and the evidence nodes exactly once.
Posterior query(const BayesNet& net, std::string_view target, const Evidence& evidence,
                std::span<const std::string> order);

/// Full joint table; the first node varies fastest.
struct JointDistribution {
  std::vector<std::string> nodes;
  std::vector<std::vector<std::string>> states;
  std::vector<double> probabilities;

  /// Marginal of one node, optionally conditioned on evidence by filtering
  /// and renormalizing the joint.
  Posterior marginal(std::string_view node, const Evidence& evidence = {}) const;
};

inline constexpr std::size_t kDefaultJointLimit = 4096;

JointDistribution joint_enumerate(const BayesNet& net, std::size_t max_entries = kDefaultJointLimit);

}  // namespace riskforge::bn
