#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "riskforge/bayes_net.hpp"
#include "riskforge/dsl.hpp"
#include "support/generators.hpp"

using namespace riskforge;

namespace {

BayesNet net_of(const std::string& text) { return dsl::parse(text).bayes_nets.at(0); }

const char* kPair = "bnet BN { node A states (t, f) cpt { () 0.5 0.5 } "
                    "node B states (t, f) parents (A) cpt { (t) 0.8 0.2 (f) 0.2 0.8 } }";

// Structure of a misuse-harm net: three causes feeding one outcome. CPT
// numbers are ours.
const char* kHarmNet = R"(
bnet HARMNET {
  node MISALIGN states (yes, no) cpt { () 0.1 0.9 }
  node UNDERTESTED states (yes, no) cpt { () 0.3 0.7 }
  node ATTACK states (yes, no) cpt { () 0.2 0.8 }
  node HARM states (severe, minor, none) parents (MISALIGN, UNDERTESTED, ATTACK) cpt {
    (yes, yes, yes) 0.6 0.3 0.1
    (yes, yes, no) 0.4 0.3 0.3
    (yes, no, yes) 0.3 0.4 0.3
    (yes, no, no) 0.1 0.3 0.6
    (no, yes, yes) 0.2 0.4 0.4
    (no, yes, no) 0.05 0.15 0.8
    (no, no, yes) 0.1 0.2 0.7
    (no, no, no) 0.01 0.04 0.95
  }
}
)";

}  // namespace

TEST(BayesQuery, PriorAndPosterior) {
  const auto net = net_of(kPair);
  EXPECT_NEAR(bn::query(net, "B")["t"], 0.5, 1e-15);
  EXPECT_NEAR(bn::query(net, "A", {{"B", "t"}})["t"], 0.8, 1e-15);
}

TEST(BayesQuery, HarmNetMatchesJoint) {
  const auto net = net_of(kHarmNet);
  const auto joint = bn::joint_enumerate(net);
  double total = 0.0;
  for (double p : joint.probabilities) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (const auto& node : net.nodes) {
    const auto q = bn::query(net, node.id);
    const auto j = joint.marginal(node.id);
    for (std::size_t s = 0; s < q.probabilities.size(); ++s) EXPECT_NEAR(q.probabilities[s], j.probabilities[s], 1e-12);
  }
  const bn::Evidence ev{{"HARM", "severe"}};
  const auto q = bn::query(net, "ATTACK", ev);
  EXPECT_NEAR(q["yes"], joint.marginal("ATTACK", ev)["yes"], 1e-12);
  EXPECT_GT(q["yes"], 0.2);  // explaining back from the outcome raises the cause
}

TEST(BayesQuery, EvidenceOnTargetRejected) {
  EXPECT_THROW(bn::query(net_of(kPair), "A", {{"A", "f"}}), DomainError);
}

TEST(BayesQuery, ZeroProbabilityEvidence) {
  const auto net = net_of("bnet BN { node A states (t, f) cpt { () 1 0 } "
                          "node B states (t, f) parents (A) cpt { (t) 1 0 (f) 0.5 0.5 } }");
  EXPECT_THROW(bn::query(net, "A", {{"B", "f"}}), bn::InconsistentEvidence);
}

TEST(BayesQuery, UnknownNodeOrState) {
  const auto net = net_of(kPair);
  EXPECT_THROW(bn::query(net, "Z"), ReferenceError);
  EXPECT_THROW(bn::query(net, "A", {{"B", "maybe"}}), ReferenceError);
}

TEST(BayesQuery, OrderIndependence) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 40; ++i) {
    const BayesNet net = rftest::random_bayes_net(rng, 7, 3);
    const std::string target = net.nodes[0].id;
    std::vector<std::string> order;
    for (std::size_t k = 1; k < net.nodes.size(); ++k) order.push_back(net.nodes[k].id);
    const auto a = bn::query(net, target);
    std::shuffle(order.begin(), order.end(), rng);
    const auto b = bn::query(net, target, {}, order);
    for (std::size_t s = 0; s < a.probabilities.size(); ++s) EXPECT_NEAR(a.probabilities[s], b.probabilities[s], 1e-12);
  }
}

TEST(BayesQuery, MatchesJointOnRandomNets) {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 40; ++i) {
    const BayesNet net = rftest::random_bayes_net(rng, 7, 3);
    const auto joint = bn::joint_enumerate(net, 1u << 20);
    bn::Evidence ev;
    if (net.nodes.size() > 1) ev[net.nodes.back().id] = net.nodes.back().states[0];
    const auto q = bn::query(net, net.nodes[0].id, ev);
    const auto j = joint.marginal(net.nodes[0].id, ev);
    for (std::size_t s = 0; s < q.probabilities.size(); ++s) EXPECT_NEAR(q.probabilities[s], j.probabilities[s], 1e-9);
  }
}

TEST(EliminationOrder, ExcludesTargetAndEvidence) {
  const auto net = net_of(kHarmNet);
  const auto order = bn::elimination_order(net, "HARM", {{"ATTACK", "yes"}});
  EXPECT_EQ(order.size(), 2u);
  EXPECT_EQ(std::count(order.begin(), order.end(), "ATTACK"), 0);
  EXPECT_EQ(bn::elimination_order(net, "HARM", {{"ATTACK", "yes"}}), order);
}

TEST(ValidateCpts, RowSummingToPointNine) {
  const auto net = net_of("bnet BN { node A states (t, f) cpt { () 0.5 0.5 } "
                          "node B states (t, f) parents (A) cpt { (t) 0.7 0.2 (f) 0.2 0.8 } }");
  const auto r = bn::validate_cpts(net);
  ASSERT_EQ(r.findings().size(), 1u);
  EXPECT_EQ(r.findings()[0].code, "cpt-row-sum");
  EXPECT_NE(r.findings()[0].location.find("B"), std::string::npos);
  EXPECT_NE(r.findings()[0].message.find("0.9"), std::string::npos);
  EXPECT_NE(r.findings()[0].message.find("(t)"), std::string::npos);
}

TEST(ValidateCpts, ThreeCycleListsNodes) {
  const auto net = net_of("bnet BN { node A states (t, f) parents (C) cpt { (t) 1 0 (f) 0 1 } "
                          "node B states (t, f) parents (A) cpt { (t) 1 0 (f) 0 1 } "
                          "node C states (t, f) parents (B) cpt { (t) 1 0 (f) 0 1 } }");
  const auto r = bn::validate_cpts(net);
  const auto it = std::find_if(r.findings().begin(), r.findings().end(), [](const Finding& f) { return f.code == "cycle"; });
  ASSERT_NE(it, r.findings().end());
  for (const char* n : {"A", "B", "C"}) EXPECT_NE(it->message.find(n), std::string::npos);
  EXPECT_THROW(bn::query(net, "A"), StructureError);
}

TEST(ValidateCpts, MissingAndDuplicateRows) {
  const auto net = net_of("bnet BN { node A states (t, f) cpt { () 0.5 0.5 } "
                          "node B states (t, f) parents (A) cpt { (t) 0.5 0.5 (t) 0.5 0.5 } }");
  const auto r = bn::validate_cpts(net);
  std::vector<std::string> codes;
  for (const auto& f : r.findings()) codes.push_back(f.code);
  EXPECT_NE(std::find(codes.begin(), codes.end(), "cpt-missing-row"), codes.end());
  EXPECT_NE(std::find(codes.begin(), codes.end(), "cpt-duplicate-row"), codes.end());
}

TEST(ValidateCpts, CleanNetHasNoFindings) {
  EXPECT_TRUE(bn::validate_cpts(net_of(kHarmNet)).empty());
}

TEST(JointEnumerate, CapRaisesLimitExceeded) {
  const auto net = net_of(kHarmNet);  // 2*2*2*3 = 24 entries
  EXPECT_THROW(bn::joint_enumerate(net, 23), LimitExceeded);
  EXPECT_NO_THROW(bn::joint_enumerate(net, 24));
}

TEST(Factor, MultiplyAndSumOut) {
  bn::Factor a{{0}, {2}, {0.3, 0.7}};
  bn::Factor b{{0, 1}, {2, 2}, {0.9, 0.2, 0.1, 0.8}};  // var 0 fastest
  const auto ab = bn::multiply(a, b);
  const auto m = bn::sum_out(ab, 0);
  ASSERT_EQ(m.values.size(), 2u);
  EXPECT_NEAR(m.values[0], 0.3 * 0.9 + 0.7 * 0.2, 1e-15);
  EXPECT_NEAR(m.values[1], 0.3 * 0.1 + 0.7 * 0.8, 1e-15);
  const auto r = bn::reduce(b, 1, 1);
  EXPECT_EQ(r.values, (std::vector<double>{0.1, 0.8}));
}
