#include "riskforge/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <tuple>

namespace riskforge {

ProbabilityValue::ProbabilityValue(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw DomainError("probability out of range [0,1]: " + format_number(value));
  }
}

Frequency::Frequency(double per_year) : per_year_(per_year) {
  if (!(per_year >= 0.0) || !std::isfinite(per_year)) {
    throw DomainError("frequency must be a finite non-negative rate: " + format_number(per_year));
  }
}

namespace {
constexpr std::array<std::pair<HarmUnit, std::string_view>, 4> kUnitNames{{
    {HarmUnit::MonetaryLoss, "monetary-loss"},
    {HarmUnit::Fatalities, "fatalities"},
    {HarmUnit::AffectedPersons, "affected-persons"},
    {HarmUnit::AbstractIndex, "abstract-index"},
}};
constexpr std::array<HarmUnit, 4> kUnits{HarmUnit::MonetaryLoss, HarmUnit::Fatalities,
                                         HarmUnit::AffectedPersons, HarmUnit::AbstractIndex};
}  // namespace

std::string_view to_string(HarmUnit unit) {
  for (const auto& [u, name] : kUnitNames) {
    if (u == unit) return name;
  }
  return "abstract-index";
}

std::optional<HarmUnit> parse_harm_unit(std::string_view text) {
  for (const auto& [u, name] : kUnitNames) {
    if (name == text) return u;
  }
  return std::nullopt;
}

std::span<const HarmUnit> all_harm_units() { return kUnits; }

SeverityValue::SeverityValue(double magnitude, HarmUnit unit) : magnitude_(magnitude), unit_(unit) {
  if (!(magnitude >= 0.0)) {
    throw DomainError("severity magnitude must be non-negative: " + format_number(magnitude));
  }
}

std::string_view to_string(QuantityKind kind) {
  switch (kind) {
    case QuantityKind::Point: return "point";
    case QuantityKind::Interval: return "interval";
    case QuantityKind::Beta: return "beta";
    case QuantityKind::Lognormal: return "lognormal";
    case QuantityKind::Triangular: return "triangular";
    case QuantityKind::Empirical: return "empirical";
    case QuantityKind::Poisson: return "poisson";
    case QuantityKind::Mixture: return "mixture";
  }
  return "point";
}

UncertainQuantity UncertainQuantity::point(double value) { return {QuantityKind::Point, {value}}; }

UncertainQuantity UncertainQuantity::interval(double lower, double upper) {
  return {QuantityKind::Interval, {lower, upper}};
}

UncertainQuantity UncertainQuantity::beta(double alpha, double beta) {
  return {QuantityKind::Beta, {alpha, beta}};
}

UncertainQuantity UncertainQuantity::lognormal(double mu, double sigma) {
  return {QuantityKind::Lognormal, {mu, sigma}};
}

UncertainQuantity UncertainQuantity::triangular(double lower, double mode, double upper) {
  return {QuantityKind::Triangular, {lower, mode, upper}};
}

UncertainQuantity UncertainQuantity::empirical(std::vector<double> samples) {
  return {QuantityKind::Empirical, std::move(samples)};
}

UncertainQuantity UncertainQuantity::poisson(double lambda) {
  return {QuantityKind::Poisson, {lambda}};
}

UncertainQuantity UncertainQuantity::mixture(std::vector<double> weights,
                                             std::vector<UncertainQuantity> components) {
  UncertainQuantity q{QuantityKind::Mixture, std::move(weights)};
  q.components_ = std::move(components);
  return q;
}

UncertainQuantity UncertainQuantity::with_provenance(std::string source) const {
  UncertainQuantity copy = *this;
  copy.provenance_ = std::move(source);
  return copy;
}

std::vector<std::string> UncertainQuantity::problems() const {
  std::vector<std::string> out;
  const auto finite = [this] {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
  };
  if (!finite()) {
    out.emplace_back("non-finite parameter");
    return out;
  }
  const auto& p = params_;
  switch (kind_) {
    case QuantityKind::Point:
      if (p.size() != 1) out.emplace_back("point takes one value");
      break;
    case QuantityKind::Interval:
      if (p.size() != 2) out.emplace_back("interval takes two bounds");
      else if (p[0] > p[1]) out.emplace_back("interval lower bound exceeds upper bound");
      break;
    case QuantityKind::Beta:
      if (p.size() != 2) out.emplace_back("beta takes two shape parameters");
      else if (!(p[0] > 0.0 && p[1] > 0.0)) out.emplace_back("beta shape parameters must be positive");
      break;
    case QuantityKind::Lognormal:
      if (p.size() != 2) out.emplace_back("lognormal takes mu and sigma");
      else if (!(p[1] > 0.0)) out.emplace_back("lognormal sigma must be positive");
      break;
    case QuantityKind::Triangular:
      if (p.size() != 3) out.emplace_back("triangular takes lower, mode and upper");
      else if (!(p[0] <= p[1] && p[1] <= p[2])) out.emplace_back("triangular requires lower <= mode <= upper");
      break;
    case QuantityKind::Empirical:
      if (p.empty()) out.emplace_back("empirical sample list is empty");
      break;
    case QuantityKind::Poisson:
      if (p.size() != 1) out.emplace_back("poisson takes one rate");
      else if (!(p[0] >= 0.0)) out.emplace_back("poisson rate must be non-negative");
      break;
    case QuantityKind::Mixture: {
      if (p.empty() || p.size() != components_.size()) {
        out.emplace_back("mixture needs one weight per component");
        break;
      }
      double sum = 0.0;
      for (double w : p) {
        if (w < 0.0) out.emplace_back("mixture weight is negative");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9) out.emplace_back("mixture weights do not sum to 1");
      for (const auto& c : components_) {
        for (auto& msg : c.problems()) out.push_back("component: " + msg);
      }
      break;
    }
  }
  return out;
}

std::string_view to_string(FindingLevel level) {
  return level == FindingLevel::Error ? "error" : "warning";
}

void ValidationReport::add(FindingLevel level, std::string location, std::string code,
                           std::string message) {
  findings_.push_back(Finding{level, std::move(location), std::move(code), std::move(message), 0, 0});
}

void ValidationReport::merge(const ValidationReport& other) {
  findings_.insert(findings_.end(), other.findings_.begin(), other.findings_.end());
}

void ValidationReport::finalize() {
  std::stable_sort(findings_.begin(), findings_.end(), [](const Finding& a, const Finding& b) {
    return std::tie(a.location, a.code, a.message) < std::tie(b.location, b.code, b.message);
  });
  findings_.erase(std::unique(findings_.begin(), findings_.end()), findings_.end());
}

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(findings_.begin(), findings_.end(), [](const Finding& f) {
    return f.level == FindingLevel::Error;
  }));
}

bool is_identifier(std::string_view text) {
  const auto letter = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  const auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (text.empty() || !letter(text.front())) return false;
  return std::all_of(text.begin() + 1, text.end(),
                     [&](char c) { return letter(c) || digit(c) || c == '_' || c == '-'; });
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf.data(), end);
}

}  // namespace riskforge
