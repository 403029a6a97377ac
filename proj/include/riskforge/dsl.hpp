#pragma once

// Reader and writer for .rsk scenario documents.
//
//   hazard H1 "model exfiltration"
//   ftree TOP and { event A p=0.1  or { event B ~beta(2, 8) "elicited"  event C p=0.2 } }
//   etree E1 init freq=2/yr
//     branch ALARM p=0.9 {
//       outcome OK severity=0 fatalities
//       outcome BAD severity=10 fatalities
//     }
//
// See README.md for the full grammar.

#include <string>
#include <string_view>
#include <vector>

#include "riskforge/core.hpp"
#include "riskforge/model.hpp"

namespace riskforge::dsl {

/// First syntax violation in a document.
class ParseError : public Error {
 public:
  ParseError(SourceSpan span, std::string message, std::vector<std::string> expected = {});

  const SourceSpan& span() const noexcept { return span_; }
  const std::string& message() const noexcept { return message_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  SourceSpan span_;
  std::string message_;
  std::vector<std::string> expected_;
};

/// Fail-fast parser. Semantic problems (a probability of 1.5, a dangling
/// reference) are left for validate().
ScenarioModel parse(std::string_view text, const std::string& filename = "<input>");

/// Reads and parses a file. IO failures raise Error.
ScenarioModel parse_file(const std::string& path);

/// Canonical document: collections sorted by id, two-space indentation,
/// shortest round-trip numbers, LF line ends. Throws DomainError when the
/// model has validation errors.
std::string serialize(const ScenarioModel& model);

}  // namespace riskforge::dsl
