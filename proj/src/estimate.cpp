#include "riskforge/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace riskforge::estimate {

namespace {

void require_score(int v, const char* name) {
  if (v < 1 || v > 10) throw DomainError(std::string(name) + " score " + std::to_string(v) + " outside 1..10");
}

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError(std::string(name) + " probability outside [0,1]");
}

BandTable make_defaults() {
  BandTable t;
  t.likelihood = {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  t.severity[HarmUnit::MonetaryLoss] = {0.0, 1e5, 1e7, 1e9, 1e11, 1e13};
  t.severity[HarmUnit::Fatalities] = {0.0, 1.0, 10.0, 1e3, 1e5, 1e7};
  t.severity[HarmUnit::AffectedPersons] = {0.0, 1e2, 1e4, 1e6, 1e8, 1e9};
  t.severity[HarmUnit::AbstractIndex] = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  t.matrix = {{
      {1, 2, 3, 4, 5, 6},
      {2, 2, 3, 4, 5, 6},
      {2, 3, 4, 5, 6, 7},
      {3, 4, 4, 5, 6, 7},
      {3, 4, 5, 6, 7, 8},
      {4, 5, 6, 7, 7, 8},
      {4, 5, 6, 7, 8, 9},
      {5, 6, 7, 8, 9, 9},
      {6, 6, 7, 8, 9, 10},
  }};
  return t;
}

template <std::size_t N>
void check_edges(const std::array<double, N>& edges, const std::string& what, std::vector<std::string>& out) {
  if (edges[0] != 0.0) out.push_back(what + " bands must start at 0");
  for (std::size_t i = 1; i < N; ++i) {
    if (!std::isfinite(edges[i]) || !(edges[i] > edges[i - 1])) {
      out.push_back(what + " band edges must strictly increase");
      return;
    }
  }
}

template <std::size_t N>
std::array<double, N> read_edges(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N) {
    throw DomainError(what + " needs " + std::to_string(N) + " lower band edges");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[i].is_number()) throw DomainError(what + " band edges must be numbers");
    out[i] = j[i].get<double>();
  }
  return out;
}

}  // namespace

int rpn(int severity, int occurrence, int detection) {
  require_score(severity, "severity");
  require_score(occurrence, "occurrence");
  require_score(detection, "detection");
  return severity * occurrence * detection;
}

std::vector<FmecaRow> rank_failure_modes(std::vector<FmecaRow> rows) {
  std::vector<std::pair<int, FmecaRow>> keyed;
  keyed.reserve(rows.size());
  for (auto& r : rows) {
    const int key = rpn(r.severity, r.occurrence, r.detection);
    keyed.emplace_back(key, std::move(r));
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    if (a.second.severity != b.second.severity) return a.second.severity > b.second.severity;
    return a.second.id < b.second.id;
  });
  std::vector<FmecaRow> out;
  out.reserve(keyed.size());
  for (auto& [k, r] : keyed) out.push_back(std::move(r));
  return out;
}

ProbabilityValue likelihood_chain(double capability, double misuse, double harm) {
  require_probability(capability, "capability");
  require_probability(misuse, "misuse");
  require_probability(harm, "harm");
  return ProbabilityValue(capability * misuse * harm);
}

// ---------------------------------------------------------------- bands

const BandTable& BandTable::defaults() {
  static const BandTable table = make_defaults();
  return table;
}

std::vector<std::string> band_table_problems(const BandTable& table) {
  std::vector<std::string> out;
  check_edges(table.likelihood, "likelihood", out);
  if (table.likelihood.back() > 1.0) out.push_back("likelihood band edges must not exceed 1");
  for (const auto& [unit, edges] : table.severity) check_edges(edges, std::string(to_string(unit)), out);
  for (std::size_t l = 0; l < kLikelihoodBands; ++l) {
    for (std::size_t s = 0; s < kSeverityBands; ++s) {
      const int v = table.matrix[l][s];
      if (v < 1 || v > 10) {
        out.push_back("risk level outside 1..10 at LL-" + std::to_string(l) + "/HSL-" + std::to_string(s + 1));
      }
      if (l > 0 && v < table.matrix[l - 1][s]) {
        out.push_back("risk level decreases from LL-" + std::to_string(l - 1) + " to LL-" + std::to_string(l) +
                      " at HSL-" + std::to_string(s + 1));
      }
      if (s > 0 && v < table.matrix[l][s - 1]) {
        out.push_back("risk level decreases from HSL-" + std::to_string(s) + " to HSL-" + std::to_string(s + 1) +
                      " at LL-" + std::to_string(l));
      }
    }
  }
  return out;
}

BandTable parse_band_table(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError(std::string("band table is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DomainError("band table must be a JSON object");
  BandTable t = BandTable::defaults();
  for (const auto& [key, value] : j.items()) {
    if (key == "likelihood") {
      t.likelihood = read_edges<kLikelihoodBands>(value, "likelihood");
    } else if (key == "severity") {
      if (!value.is_object()) throw DomainError("severity bands must be an object keyed by unit");
      for (const auto& [unit_name, edges] : value.items()) {
        auto unit = parse_harm_unit(unit_name);
        if (!unit) throw DomainError("unknown harm unit " + unit_name);
        t.severity[*unit] = read_edges<kSeverityBands>(edges, unit_name);
      }
    } else if (key == "matrix") {
      if (!value.is_array() || value.size() != kLikelihoodBands) throw DomainError("matrix needs 9 rows");
      for (std::size_t l = 0; l < kLikelihoodBands; ++l) {
        const auto& row = value[l];
        if (!row.is_array() || row.size() != kSeverityBands) throw DomainError("matrix rows need 6 entries");
        for (std::size_t s = 0; s < kSeverityBands; ++s) {
          if (!row[s].is_number_integer()) throw DomainError("matrix entries must be integers");
          t.matrix[l][s] = row[s].get<int>();
        }
      }
    } else {
      throw DomainError("unknown band table key " + key);
    }
  }
  auto problems = band_table_problems(t);
  if (!problems.empty()) throw DomainError("band table rejected: " + problems.front());
  return t;
}

BandTable load_band_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read band table " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_band_table(buf.str());
}

int band_likelihood(double p, const BandTable& table) {
  require_probability(p, "banded");
  auto it = std::upper_bound(table.likelihood.begin(), table.likelihood.end(), p);
  return static_cast<int>(it - table.likelihood.begin()) - 1;
}

int band_severity(double magnitude, HarmUnit unit, const BandTable& table) {
  if (!(magnitude >= 0.0)) throw DomainError("severity must be non-negative");
  auto found = table.severity.find(unit);
  if (found == table.severity.end()) throw DomainError("no severity bands for unit " + std::string(to_string(unit)));
  const auto& edges = found->second;
  auto it = std::upper_bound(edges.begin(), edges.end(), magnitude);
  return static_cast<int>(it - edges.begin());
}

int matrix_cell(int ll, int hsl, const BandTable& table) {
  if (ll < 0 || ll > 8) throw DomainError("likelihood level outside LL-0..LL-8");
  if (hsl < 1 || hsl > 6) throw DomainError("severity level outside HSL-1..HSL-6");
  return table.matrix[static_cast<std::size_t>(ll)][static_cast<std::size_t>(hsl - 1)];
}

// ---------------------------------------------------------------- experts

UncertainQuantity pool_experts(std::span<const ExpertEstimate> estimates, std::span<const double> weights) {
  if (estimates.empty()) throw DomainError("expert panel is empty");
  std::vector<double> w;
  if (!weights.empty()) {
    w.assign(weights.begin(), weights.end());
  } else {
    const auto given = std::count_if(estimates.begin(), estimates.end(), [](const auto& e) { return e.weight.has_value(); });
    if (given == static_cast<std::ptrdiff_t>(estimates.size())) {
      for (const auto& e : estimates) w.push_back(*e.weight);
    } else if (given == 0) {
      w.assign(estimates.size(), 1.0 / static_cast<double>(estimates.size()));
    } else {
      throw DomainError("either every expert estimate carries a weight or none does");
    }
  }
  if (w.size() != estimates.size()) throw DomainError("one weight per expert estimate is required");
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw DomainError("expert weights must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("expert weights must sum to 1");
  for (const auto& e : estimates) {
    auto issues = e.quantity.problems();
    if (!issues.empty()) throw DomainError("estimate of " + e.expert + " is invalid: " + issues.front());
  }

  const bool identical = std::all_of(estimates.begin(), estimates.end(),
                                     [&](const auto& e) { return e.quantity == estimates.front().quantity; });
  if (identical) return estimates.front().quantity;

  const bool points = std::all_of(estimates.begin(), estimates.end(), [](const auto& e) { return e.quantity.is_point(); });
  if (points) {
    double mean = 0.0;
    double lo = estimates.front().quantity.params()[0], hi = lo;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      const double v = estimates[i].quantity.params()[0];
      mean += w[i] * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return UncertainQuantity::point(std::clamp(mean, lo, hi));
  }
  std::vector<UncertainQuantity> components;
  for (const auto& e : estimates) components.push_back(e.quantity);
  return UncertainQuantity::mixture(std::move(w), std::move(components));
}

std::vector<double> brier_scores(const std::vector<std::vector<double>>& answers, const std::vector<bool>& truths) {
  if (truths.empty()) throw DomainError("calibration needs at least one seed question");
  if (answers.empty()) throw DomainError("expert panel is empty");
  std::vector<double> scores;
  for (std::size_t e = 0; e < answers.size(); ++e) {
    if (answers[e].size() != truths.size()) {
      throw DomainError("expert " + std::to_string(e) + " must answer every seed question");
    }
    double sq = 0.0;
    for (std::size_t q = 0; q < truths.size(); ++q) {
      const double p = answers[e][q];
      require_probability(p, "seed answer");
      const double d = p - (truths[q] ? 1.0 : 0.0);
      sq += d * d;
    }
    scores.push_back(sq / static_cast<double>(truths.size()));
  }
  return scores;
}

std::vector<double> calibration_weights(const std::vector<std::vector<double>>& answers,
                                        const std::vector<bool>& truths) {
  const auto scores = brier_scores(answers, truths);
  std::vector<double> w;
  double sum = 0.0;
  for (double b : scores) {
    w.push_back(std::max(0.0, 1.0 - b));
    sum += w.back();
  }
  if (sum <= 0.0) throw DomainError("every expert has zero calibration weight; choose equal weights explicitly");
  for (double& x : w) x /= sum;
  return w;
}

// ---------------------------------------------------------------- capability mapping

std::vector<std::string> mapping_problems(const CapabilityMapping& mapping) {
  std::vector<std::string> out;
  const auto& a = mapping.anchors;
  if (a.size() < 2) out.push_back("capability mapping needs at least two anchors");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i].first)) out.push_back("anchor score must be finite");
    if (!(a[i].second >= 0.0 && a[i].second <= 1.0)) out.push_back("anchor probability outside [0,1]");
    if (i > 0 && !(a[i].first > a[i - 1].first)) out.push_back("anchor scores must strictly increase");
    if (i > 0 && a[i].second < a[i - 1].second) out.push_back("anchor probabilities must not decrease");
  }
  return out;
}

ProbabilityValue capability_to_step_probability(const CapabilityMapping& mapping, double score) {
  auto problems = mapping_problems(mapping);
  if (!problems.empty()) throw DomainError("malformed capability mapping: " + problems.front());
  if (std::isnan(score)) throw DomainError("benchmark score is NaN");
  const auto& a = mapping.anchors;
  if (score <= a.front().first) return ProbabilityValue(a.front().second);
  if (score >= a.back().first) return ProbabilityValue(a.back().second);
  auto hi = std::upper_bound(a.begin(), a.end(), score, [](double s, const auto& p) { return s < p.first; });
  auto lo = std::prev(hi);
  const double t = (score - lo->first) / (hi->first - lo->first);
  const double p = lo->second + t * (hi->second - lo->second);
  return ProbabilityValue(std::clamp(p, lo->second, hi->second));
}

}  // namespace riskforge::estimate
