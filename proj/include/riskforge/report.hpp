#pragma once

// JSON and CSV renderings of analysis results. Keys keep a fixed order.

#include <span>
#include <string>

#include "json.hpp"
#include "riskforge/bayes_net.hpp"
#include "riskforge/event_tree.hpp"
#include "riskforge/fault_tree.hpp"
#include "riskforge/quant.hpp"
#include "riskforge/risk_eval.hpp"

namespace riskforge::report {

using Json = nlohmann::ordered_json;

Json to_json(const ValidationReport& report);
Json to_json(std::span<const fta::CutSet> cut_sets);
Json to_json(std::span<const eta::SequenceOutcome> sequences);
Json to_json(const bn::Posterior& posterior);
Json to_json(const quant::RiskCurve& curve);
Json to_json(const quant::Summary& summary);
Json to_json(const quant::RiskProfile& profile);
Json to_json(const eval::CheckResult& check);
Json to_json(const eval::ToleranceResult& result);
Json to_json(const eval::Verdict& verdict);

/// "severity,exceedance" header, one row per curve point.
std::string curve_csv(const quant::RiskCurve& curve);

/// Compact single-line JSON followed by a newline.
std::string dump(const Json& value);

}  // namespace riskforge::report
