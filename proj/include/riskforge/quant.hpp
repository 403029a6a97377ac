#pragma once

// Uncertainty propagation: seeded Monte Carlo, Gaussian copula, Markov stage
// pipelines, exceedance curves, VaR/CVaR and compound loss aggregation.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "riskforge/core.hpp"
#include "riskforge/fault_tree.hpp"
#include "riskforge/model.hpp"
#include "riskforge/random.hpp"

namespace riskforge::quant {

/// Trials are grouped in chunks of this size; every chunk draws from its own
/// substream so results do not depend on how chunks are scheduled.
inline constexpr std::size_t kChunkSize = 4096;

/// Uniform draw `trial` of a stream under the chunked substream layout.
double trial_uniform(const RandomStream& stream, std::size_t trial);

/// Substream of a named variable (FNV-1a of the id).
RandomStream variable_stream(const RandomStream& stream, std::string_view variable);

// ---------------------------------------------------------------- sampling

struct Samples {
  std::vector<double> values;
  /// Draws clamped into [0,1] because a probability-typed quantity's
  /// distribution reaches outside it.
  std::size_t truncated = 0;
};

/// n inverse-CDF draws. With `probability` set, draws are clamped to [0,1].
Samples sample(const UncertainQuantity& q, const RandomStream& stream, std::size_t n, bool probability = false);

// ---------------------------------------------------------------- copulas

struct CorrelationSpec {
  std::vector<std::string> variables;
  std::vector<std::vector<double>> matrix;
};

/// Lower-triangular factor of a symmetric, unit-diagonal correlation matrix.
/// Semi-definite matrices are accepted (zero pivots). If factorization fails,
/// 1e-8 is added to the diagonal once before giving up with DomainError.
std::vector<std::vector<double>> cholesky(const CorrelationSpec& spec);

struct JointSample {
  std::vector<std::string> variables;          // sorted ids
  std::vector<std::vector<double>> uniforms;   // per variable, copula scale
  std::vector<std::vector<double>> values;     // per variable, marginal scale
  std::size_t truncated = 0;

  const std::vector<double>& column(std::string_view id) const;
  const std::vector<double>& uniform_column(std::string_view id) const;
};

/// Gaussian copula: correlated normals via Cholesky, mapped through the
/// normal CDF to uniforms and then through each marginal's inverse CDF.
/// Marginals not named in `spec` are independent of everything else.
JointSample copula_sample(const CorrelationSpec& spec, const std::map<std::string, UncertainQuantity>& marginals,
                          const RandomStream& stream, std::size_t n,
                          const std::set<std::string>& probability_ids = {});

// ---------------------------------------------------------------- curves

struct CurvePoint {
  double severity = 0.0;
  double exceedance = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// P(severity >= x) sampled at strictly increasing severities, values
/// non-increasing in [0,1]. Read as a right-continuous step function: the
/// value at x is that of the last point at or below x, and the first
/// point's value below the first severity.
class RiskCurve {
 public:
  RiskCurve() = default;
  /// Throws DomainError if the invariants do not hold.
  explicit RiskCurve(std::vector<CurvePoint> points);

  const std::vector<CurvePoint>& points() const noexcept { return points_; }
  bool empty() const noexcept { return points_.empty(); }
  double at(double severity) const;

  friend bool operator==(const RiskCurve&, const RiskCurve&) = default;

 private:
  std::vector<CurvePoint> points_;
};

/// Count-based tail fractions at every distinct sample value.
RiskCurve exceedance_curve(std::span<const double> samples);

struct WeightedSeverity {
  double severity = 0.0;
  double probability = 0.0;
};

/// Sum of probabilities at or above each distinct severity. The total
/// probability must not exceed 1.
RiskCurve exceedance_curve(std::span<const WeightedSeverity> outcomes);

struct LabeledCurve {
  std::string label;
  RiskCurve curve;
};

struct RiskCurveFamily {
  std::vector<LabeledCurve> members;
  std::vector<double> weights;
  RiskCurve pooled;
  RiskCurve lower;
  RiskCurve upper;
};

/// Linear pool of member curves on the union severity grid plus pointwise
/// min/max envelopes. Weights must be non-negative and sum to 1 (1e-9).
RiskCurveFamily curve_family(std::vector<LabeledCurve> members, std::vector<double> weights);

// ---------------------------------------------------------------- loss metrics

struct LossMetrics {
  double var = 0.0;
  double cvar = 0.0;
  double alpha = 0.95;
};

/// VaR is the smallest sample whose empirical CDF reaches alpha. CVaR is the
/// Rockafellar-Uryasev tail mean: the atom at VaR carries the fractional
/// weight F(VaR) - alpha, the samples above it weight 1/n each, all divided
/// by 1 - alpha.
LossMetrics var_cvar(std::span<const double> losses, double alpha);

/// Smallest sample whose empirical CDF reaches q, for q in (0,1].
double empirical_quantile(std::span<const double> samples, double q);

// ---------------------------------------------------------------- Markov stages

/// Product of independent stage success probabilities.
ProbabilityValue markov_pipeline(std::span<const double> stage_success);

using Matrix = std::vector<std::vector<double>>;

/// Distribution after applying each row-stochastic transition in turn.
std::vector<double> markov_chain(std::span<const Matrix> transitions, std::span<const double> initial);

/// Probability mass in `success_state` after all transitions.
ProbabilityValue markov_pipeline(std::span<const Matrix> transitions, std::span<const double> initial,
                                 std::size_t success_state);

// ---------------------------------------------------------------- propagation

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

/// Welford mean and standard error in trial order, and empirical percentiles.
Summary summarize(std::span<const double> samples);

struct PropagateOptions {
  std::uint64_t seed = 42;
  std::size_t trials = 10'000;
  std::optional<CorrelationSpec> correlations;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
  fta::Limits limits;
};

enum class ElementKind { FaultTree, EventTree, BowTie, LikelihoodChain, Loss };

std::string_view to_string(ElementKind kind);

/// Monte Carlo output. `samples` holds one value per trial: the top-event
/// probability for fault trees, the chain product for likelihood chains,
/// the annual loss for loss models, and the expected harm
/// (sum of sequence value x severity) for event trees and bow-ties.
struct RiskProfile {
  std::string target;
  ElementKind kind = ElementKind::FaultTree;
  std::uint64_t seed = 0;
  std::vector<double> samples;
  Summary summary;
  std::size_t truncated = 0;
  bool frequency = false;
  /// "exact" or "rare-event" for fault-tree based elements.
  std::string mode;

  /// Exceedance data, present for event trees, bow-ties and loss models whose
  /// outcomes share one harm unit and carry probabilities.
  std::optional<HarmUnit> unit;
  RiskCurve mean_curve;
  RiskCurve p05_curve;
  RiskCurve p50_curve;
  RiskCurve p95_curve;
};

RiskProfile propagate_fault_tree(const FaultTree& tree, const PropagateOptions& options = {});
RiskProfile propagate_event_tree(const EventTree& tree, const PropagateOptions& options = {});
RiskProfile propagate_bowtie(const BowTie& bowtie, const ScenarioModel& model, const PropagateOptions& options = {});
RiskProfile propagate_chain(const LikelihoodChainSpec& chain, const PropagateOptions& options = {});
RiskProfile propagate_loss(const LossModel& loss, const PropagateOptions& options = {});

/// Dispatches on the kind of entity named `target`.
RiskProfile propagate(const ScenarioModel& model, std::string_view target, const PropagateOptions& options = {});

/// Compound annual loss: per trial draw a count k, then k severities, and sum.
RiskProfile aggregate_loss(const UncertainQuantity& frequency, const UncertainQuantity& severity,
                           const RandomStream& stream, std::size_t n, unsigned threads = 0);

}  // namespace riskforge::quant
