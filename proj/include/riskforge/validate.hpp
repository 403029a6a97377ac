#pragma once

#include "riskforge/core.hpp"
#include "riskforge/model.hpp"

namespace riskforge {

/// Every violated model invariant as a finding, sorted by location, code and
/// message. Findings carry the source position of the entity when the model
/// came from a document. Never throws on a malformed model.
///
/// Locations look like "ftree:TOP/event:A", "etree:E1/branch:ALARM",
/// "bnet:BN/node:B" or "bowtie:BT1".
ValidationReport validate(const ScenarioModel& model);

}  // namespace riskforge
