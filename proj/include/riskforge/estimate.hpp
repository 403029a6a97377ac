#pragma once

// Semi-quantitative estimation: FMECA ranking, likelihood chains, severity
// and likelihood bands, the risk-level matrix, expert pooling.

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskforge/core.hpp"
#include "riskforge/model.hpp"

namespace riskforge::estimate {

/// S x O x D. Each score must lie in 1..10.
int rpn(int severity, int occurrence, int detection);

/// Descending RPN, then descending severity, then id.
std::vector<FmecaRow> rank_failure_modes(std::vector<FmecaRow> rows);

/// P(capability) x P(misuse | capability) x P(harm | misuse).
ProbabilityValue likelihood_chain(double capability, double misuse, double harm);

inline constexpr std::size_t kLikelihoodBands = 9;  // LL-0 .. LL-8
inline constexpr std::size_t kSeverityBands = 6;    // HSL-1 .. HSL-6

/// Lower band edges and the risk-level matrix. Cells are half-open
/// [edge_i, edge_{i+1}); the last band is closed at 1 for likelihoods and
/// open-ended for severities.
struct BandTable {
  std::array<double, kLikelihoodBands> likelihood{};
  std::map<HarmUnit, std::array<double, kSeverityBands>> severity;
  /// matrix[ll][hsl - 1] is the risk level RL-1 .. RL-10.
  std::array<std::array<int, kSeverityBands>, kLikelihoodBands> matrix{};

  static const BandTable& defaults();
};

/// Checks edge ordering, matrix range and monotonicity; empty iff usable.
std::vector<std::string> band_table_problems(const BandTable& table);

/// Parses the JSON band-table format. Keys left out keep their defaults.
/// Throws DomainError with the problems of an unusable table.
BandTable parse_band_table(std::string_view json_text);
BandTable load_band_table(const std::string& path);

/// LL index 0..8.
int band_likelihood(double p, const BandTable& table = BandTable::defaults());
/// HSL level 1..6.
int band_severity(double magnitude, HarmUnit unit, const BandTable& table = BandTable::defaults());
/// RL level 1..10.
int matrix_cell(int ll, int hsl, const BandTable& table = BandTable::defaults());

struct ExpertEstimate {
  std::string expert;
  UncertainQuantity quantity;
  std::optional<double> weight;
};

/// Linear opinion pool. Explicit `weights` win; otherwise the estimates' own
/// weights are used when every estimate has one, and equal weights when none
/// does. Weights must sum to 1 within 1e-9.
UncertainQuantity pool_experts(std::span<const ExpertEstimate> estimates, std::span<const double> weights = {});

/// Pool weights from seed questions. answers[e][q] is expert e's probability
/// that question q is true. Weight of expert e is proportional to
/// max(0, 1 - Brier_e).
std::vector<double> calibration_weights(const std::vector<std::vector<double>>& answers,
                                        const std::vector<bool>& truths);

std::vector<double> brier_scores(const std::vector<std::vector<double>>& answers, const std::vector<bool>& truths);

struct CapabilityMapping {
  std::vector<std::pair<double, double>> anchors;  // (benchmark score, step probability)
};

std::vector<std::string> mapping_problems(const CapabilityMapping& mapping);

/// Piecewise-linear between anchors, clamped to the end anchors.
ProbabilityValue capability_to_step_probability(const CapabilityMapping& mapping, double score);

}  // namespace riskforge::estimate
