#pragma once

// Shared value types and the error hierarchy used by every riskforge module.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace riskforge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value or parameter outside its admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A reference to an entity, node, state or quantity that does not exist.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

/// Structural defects an engine cannot work around (cycles, missing data).
class StructureError : public Error {
 public:
  using Error::Error;
};

/// A configured size cap was exceeded. Carries the cap so callers can report it.
class LimitExceeded : public Error {
 public:
  LimitExceeded(const std::string& what, std::size_t limit)
      : Error(what + " (limit " + std::to_string(limit) + ")"), limit_(limit) {}
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t limit_;
};

/// Probability in [0, 1]. Construction rejects anything else, including NaN.
class ProbabilityValue {
 public:
  constexpr ProbabilityValue() = default;
  explicit ProbabilityValue(double value);

  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

/// Occurrence rate in events per year, non-negative.
class Frequency {
 public:
  constexpr Frequency() = default;
  explicit Frequency(double per_year);

  constexpr double per_year() const noexcept { return per_year_; }

  friend constexpr bool operator==(Frequency, Frequency) = default;

 private:
  double per_year_ = 0.0;
};

enum class HarmUnit { MonetaryLoss, Fatalities, AffectedPersons, AbstractIndex };

std::string_view to_string(HarmUnit unit);
std::optional<HarmUnit> parse_harm_unit(std::string_view text);
std::span<const HarmUnit> all_harm_units();

/// Non-negative harm magnitude tagged with its unit.
class SeverityValue {
 public:
  SeverityValue() = default;
  SeverityValue(double magnitude, HarmUnit unit);

  double magnitude() const noexcept { return magnitude_; }
  HarmUnit unit() const noexcept { return unit_; }

  friend bool operator==(const SeverityValue&, const SeverityValue&) = default;

 private:
  double magnitude_ = 0.0;
  HarmUnit unit_ = HarmUnit::AbstractIndex;
};

enum class QuantityKind { Point, Interval, Beta, Lognormal, Triangular, Empirical, Poisson, Mixture };

std::string_view to_string(QuantityKind kind);

/// A probability, severity or count given as a point, interval or distribution.
///
/// Factories never reject parameters: parsed documents may hold invalid
/// quantities that are reported by validation. `problems()` lists what is
/// wrong, and every sampling or moment routine throws DomainError on an
/// invalid quantity.
///
/// Parameter layout per kind:
///   point(v)               {v}
///   interval(lo, hi)       {lo, hi}           sampled uniformly
///   beta(alpha, beta)      {alpha, beta}
///   lognormal(mu, sigma)   {mu, sigma}        parameters of log(X)
///   triangular(a, m, b)    {a, m, b}
///   empirical(x...)        {x...}             equally weighted atoms
///   poisson(lambda)        {lambda}           event counts
///   mixture                weights in params, components in components()
class UncertainQuantity {
 public:
  UncertainQuantity() = default;

  static UncertainQuantity point(double value);
  static UncertainQuantity interval(double lower, double upper);
  static UncertainQuantity beta(double alpha, double beta);
  static UncertainQuantity lognormal(double mu, double sigma);
  static UncertainQuantity triangular(double lower, double mode, double upper);
  static UncertainQuantity empirical(std::vector<double> samples);
  static UncertainQuantity poisson(double lambda);
  static UncertainQuantity mixture(std::vector<double> weights,
                                   std::vector<UncertainQuantity> components);

  QuantityKind kind() const noexcept { return kind_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<const UncertainQuantity> components() const noexcept { return components_; }

  const std::string& provenance() const noexcept { return provenance_; }
  UncertainQuantity with_provenance(std::string source) const;

  bool is_point() const noexcept { return kind_ == QuantityKind::Point; }

  /// Empty iff the parameters are admissible.
  std::vector<std::string> problems() const;
  bool valid() const { return problems().empty(); }

  /// Closed support [lo, hi]; hi may be +infinity.
  std::pair<double, double> support() const;
  double mean() const;
  double cdf(double x) const;
  /// Inverse CDF: the smallest x with cdf(x) >= u, for u in (0, 1).
  double quantile(double u) const;

  friend bool operator==(const UncertainQuantity&, const UncertainQuantity&) = default;

 private:
  UncertainQuantity(QuantityKind kind, std::vector<double> params)
      : kind_(kind), params_(std::move(params)) {}

  QuantityKind kind_ = QuantityKind::Point;
  std::vector<double> params_{0.0};
  std::vector<UncertainQuantity> components_;
  std::string provenance_;
};

enum class FindingLevel { Error, Warning };

std::string_view to_string(FindingLevel level);

/// One validation result. `location` is an entity path such as
/// "ftree:TOP/event:A"; `code` is a stable machine-readable tag.
struct Finding {
  FindingLevel level = FindingLevel::Error;
  std::string location;
  std::string code;
  std::string message;
  // Source position when the entity came from a document (0 when unknown).
  int line = 0;
  int column = 0;

  friend bool operator==(const Finding&, const Finding&) = default;
};

class ValidationReport {
 public:
  void add(FindingLevel level, std::string location, std::string code, std::string message);
  void error(std::string location, std::string code, std::string message) {
    add(FindingLevel::Error, std::move(location), std::move(code), std::move(message));
  }
  void warning(std::string location, std::string code, std::string message) {
    add(FindingLevel::Warning, std::move(location), std::move(code), std::move(message));
  }
  void merge(const ValidationReport& other);

  /// Sort findings by location, then code, then message.
  void finalize();

  const std::vector<Finding>& findings() const noexcept { return findings_; }
  std::vector<Finding>& findings() noexcept { return findings_; }
  bool empty() const noexcept { return findings_.empty(); }
  std::size_t error_count() const;
  bool has_errors() const { return error_count() > 0; }

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;

 private:
  std::vector<Finding> findings_;
};

/// Identifier rule shared by the DSL and validation: a letter followed by
/// letters, digits, '_' or '-'. Case-sensitive.
bool is_identifier(std::string_view text);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace riskforge
