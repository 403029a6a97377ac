#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "riskforge/estimate.hpp"

using namespace riskforge;
using namespace riskforge::estimate;

TEST(Rpn, Product) {
  EXPECT_EQ(rpn(9, 3, 7), 189);
  EXPECT_EQ(rpn(1, 1, 1), 1);
  EXPECT_EQ(rpn(10, 10, 10), 1000);
  EXPECT_THROW(rpn(0, 3, 3), DomainError);
  EXPECT_THROW(rpn(3, 11, 3), DomainError);
}

TEST(Ranking, TieBreaks) {
  // RPN 60 four ways: severity decides, then id.
  const std::vector<FmecaRow> rows{{"LOW", 3, 4, 5, ""}, {"HIGH", 9, 3, 7, ""}, {"TIE5", 5, 6, 2, ""},
                                   {"TIE10", 10, 3, 2, ""}, {"ALT", 3, 5, 4, ""}};
  const auto r = rank_failure_modes(rows);
  std::vector<std::string> ids;
  for (const auto& x : r) ids.push_back(x.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"HIGH", "TIE10", "TIE5", "ALT", "LOW"}));
}

TEST(Ranking, MatchesSortOracle) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> s(1, 10);
  for (int k = 0; k < 50; ++k) {
    std::vector<FmecaRow> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({"M" + std::to_string(i), s(rng), s(rng), s(rng), ""});
    auto oracle = rows;
    // Key tuple (-rpn, -severity, id) compared lexicographically.
    std::sort(oracle.begin(), oracle.end(), [](const FmecaRow& a, const FmecaRow& b) {
      const auto key = [](const FmecaRow& r) { return std::make_tuple(-r.severity * r.occurrence * r.detection, -r.severity, r.id); };
      return key(a) < key(b);
    });
    EXPECT_EQ(rank_failure_modes(rows), oracle);
  }
}

TEST(LikelihoodChain, Product) {
  EXPECT_NEAR(likelihood_chain(0.5, 0.2, 0.1), 0.01, 1e-17);
  EXPECT_EQ(likelihood_chain(0.5, 0.0, 0.1), 0.0);
  EXPECT_EQ(likelihood_chain(1, 1, 1), 1.0);
  EXPECT_THROW(likelihood_chain(1.2, 1, 1), DomainError);
}

TEST(Bands, LikelihoodEdges) {
  EXPECT_EQ(band_likelihood(0.0), 0);
  EXPECT_EQ(band_likelihood(1.0), 8);
  const auto& edges = BandTable::defaults().likelihood;
  for (std::size_t i = 1; i < edges.size(); ++i) {
    EXPECT_EQ(band_likelihood(edges[i]), int(i));
    EXPECT_EQ(band_likelihood(std::nextafter(edges[i], 0.0)), int(i) - 1);
  }
  EXPECT_EQ(band_likelihood(3e-4), 5);  // lower edge 1e-4
  EXPECT_THROW(band_likelihood(1.5), DomainError);
}

TEST(Bands, SeverityPerUnit) {
  EXPECT_EQ(band_severity(0, HarmUnit::Fatalities), 1);
  EXPECT_EQ(band_severity(10, HarmUnit::Fatalities), 3);
  EXPECT_EQ(band_severity(9.99, HarmUnit::Fatalities), 2);
  EXPECT_EQ(band_severity(1e12, HarmUnit::MonetaryLoss), 5);
  EXPECT_EQ(band_severity(1e300, HarmUnit::AffectedPersons), 6);
  EXPECT_THROW(band_severity(-1, HarmUnit::Fatalities), DomainError);
}

TEST(Matrix, CornersAndMonotone) {
  EXPECT_EQ(matrix_cell(0, 1), 1);
  EXPECT_EQ(matrix_cell(8, 6), 10);
  for (int l = 0; l <= 8; ++l) {
    for (int h = 1; h <= 6; ++h) {
      if (l > 0) EXPECT_GE(matrix_cell(l, h), matrix_cell(l - 1, h));
      if (h > 1) EXPECT_GE(matrix_cell(l, h), matrix_cell(l, h - 1));
    }
  }
  EXPECT_THROW(matrix_cell(9, 1), DomainError);
}

TEST(BandTable, JsonOverride) {
  const auto t = parse_band_table(R"({"severity": {"fatalities": [0, 2, 20, 200, 2000, 20000]}})");
  EXPECT_EQ(band_severity(10, HarmUnit::Fatalities, t), 2);
  EXPECT_EQ(t.likelihood, BandTable::defaults().likelihood);
  EXPECT_THROW(parse_band_table(R"({"colour": 1})"), DomainError);
  EXPECT_THROW(parse_band_table(R"({"likelihood": [0, 1e-3, 1e-4, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5]})"), DomainError);
  EXPECT_THROW(parse_band_table("{not json"), DomainError);
  auto bad = BandTable::defaults();
  bad.matrix[4][3] = 1;
  EXPECT_FALSE(band_table_problems(bad).empty());
  EXPECT_TRUE(band_table_problems(BandTable::defaults()).empty());
}

TEST(Pooling, PointsPoolToWeightedMean) {
  const std::vector<ExpertEstimate> e{{"a", UncertainQuantity::point(0.2), {}}, {"b", UncertainQuantity::point(0.4), {}}};
  EXPECT_NEAR(pool_experts(e).mean(), 0.3, 1e-15);
  const std::vector<double> w{0.9, 0.1};
  EXPECT_NEAR(pool_experts(e, w).mean(), 0.22, 1e-15);
}

TEST(Pooling, IdenticalEstimatesIdempotent) {
  const auto q = UncertainQuantity::beta(2, 8);
  const std::vector<ExpertEstimate> e{{"a", q, {}}, {"b", q, {}}};
  EXPECT_EQ(pool_experts(e), q);
}

TEST(Pooling, DistributionsFormMixture) {
  const std::vector<ExpertEstimate> e{{"a", UncertainQuantity::beta(2, 8), 0.25}, {"b", UncertainQuantity::interval(0.4, 0.6), 0.75}};
  const auto p = pool_experts(e);
  EXPECT_EQ(p.kind(), QuantityKind::Mixture);
  EXPECT_NEAR(p.mean(), 0.25 * 0.2 + 0.75 * 0.5, 1e-15);
}

TEST(Pooling, Errors) {
  EXPECT_THROW(pool_experts({}), DomainError);
  const std::vector<ExpertEstimate> e{{"a", UncertainQuantity::point(0.2), {}}, {"b", UncertainQuantity::point(0.4), {}}};
  const std::vector<double> w{0.5, 0.4};
  EXPECT_THROW(pool_experts(e, w), DomainError);
  const std::vector<ExpertEstimate> partial{{"a", UncertainQuantity::point(0.2), 1.0}, {"b", UncertainQuantity::point(0.4), {}}};
  EXPECT_THROW(pool_experts(partial), DomainError);
}

TEST(Calibration, BrierScores) {
  const std::vector<std::vector<double>> answers{{1, 1, 1}, {0.5, 0.5, 0.5}};
  const std::vector<bool> truths{true, true, true};
  EXPECT_EQ(brier_scores(answers, truths), (std::vector<double>{0.0, 0.25}));
  // Weights proportional to 1 - B: 1 and 0.75.
  const auto w = calibration_weights(answers, truths);
  EXPECT_NEAR(w[0], 4.0 / 7.0, 1e-15);
  EXPECT_NEAR(w[1], 3.0 / 7.0, 1e-15);
}

TEST(Calibration, SingleAndSymmetric) {
  EXPECT_EQ(calibration_weights({{0.3, 0.9}}, {false, true}), std::vector<double>{1.0});
  const auto w = calibration_weights({{0.3, 0.9}, {0.3, 0.9}}, {false, true});
  EXPECT_EQ(w[0], w[1]);
  EXPECT_THROW(calibration_weights({{0.0}, {0.0}}, {true}), DomainError);  // all zero weight
}

TEST(CapabilityMapping, LinearAndClamped) {
  const CapabilityMapping m{{{0.2, 0.05}, {0.8, 0.5}}};
  EXPECT_NEAR(capability_to_step_probability(m, 0.5), 0.275, 1e-15);
  EXPECT_EQ(capability_to_step_probability(m, 0.1), 0.05);
  EXPECT_EQ(capability_to_step_probability(m, 0.95), 0.5);
  EXPECT_FALSE(mapping_problems(CapabilityMapping{{{0.5, 0.3}, {0.2, 0.4}}}).empty());
  EXPECT_FALSE(mapping_problems(CapabilityMapping{{{0.2, 0.5}, {0.5, 0.3}}}).empty());  // decreasing
}

TEST(CapabilityMapping, MatchesSegmentOracle) {
  const CapabilityMapping m{{{10, 0.01}, {40, 0.1}, {90, 0.7}}};
  // Lines through consecutive anchors.
  const auto oracle = [](double x) {
    if (x <= 10) return 0.01;
    if (x <= 40) return 0.01 + (x - 10) * (0.09 / 30.0);
    if (x <= 90) return 0.1 + (x - 40) * (0.6 / 50.0);
    return 0.7;
  };
  for (int i = 0; i < 20; ++i) {
    const double x = -5.0 + 5.5 * i;
    EXPECT_NEAR(capability_to_step_probability(m, x), oracle(x), 1e-14) << x;
  }
}
