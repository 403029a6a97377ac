// Acceptance suite. Prints one PASS/FAIL line per criterion; `acceptance N`
// runs criterion N alone. Exit status is non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "riskforge/bayes_net.hpp"
#include "riskforge/distributions.hpp"
#include "riskforge/dsl.hpp"
#include "riskforge/estimate.hpp"
#include "riskforge/event_tree.hpp"
#include "riskforge/fault_tree.hpp"
#include "riskforge/quant.hpp"
#include "riskforge/risk_eval.hpp"
#include "support/generators.hpp"

using namespace riskforge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<FaultTree> suite_trees() {
  std::mt19937_64 rng(20240601);
  std::vector<FaultTree> trees;
  for (int i = 0; i < 200; ++i) trees.push_back(rftest::random_fault_tree(rng, 12));
  return trees;
}

// ---------------------------------------------------------------- 1

Outcome mcs_oracle() {
  const auto t0 = Clock::now();
  int mismatches = 0;
  std::size_t max_events = 0;
  for (const FaultTree& t : suite_trees()) {
    max_events = std::max(max_events, rftest::reachable_events(t).size());
    if (fta::minimal_cut_sets(t) != rftest::oracle_cut_sets(t)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0 && max_events <= 12,
          fmt("200 trees (max %zu events), %d mismatches, %.2f s", max_events, mismatches, secs)};
}

// ---------------------------------------------------------------- 2

Outcome top_probability() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> log_small(std::log(1e-6), std::log(1e-3));
  double max_err = 0.0, max_gap = 0.0;
  int rare_below = 0;
  for (const FaultTree& t : suite_trees()) {
    for (int regime = 0; regime < 2; ++regime) {
      fta::Assignment asg;
      std::map<std::string, double> p;
      for (const auto& e : t.events) {
        p[e.id] = regime == 0 ? u(rng) : std::exp(log_small(rng));
        asg.emplace(e.id, ProbabilityValue(p[e.id]));
      }
      const double exact = fta::top_probability_exact(t, asg);
      const double rare = fta::top_probability_rare(t, asg);
      max_err = std::max(max_err, std::abs(exact - rftest::oracle_top_probability(t, p)));
      // One ulp of summation-order noise is not a bound violation.
      if (rare < exact * (1.0 - 1e-12)) ++rare_below;
      if (regime == 1) max_gap = std::max(max_gap, (rare - exact) / exact);
    }
  }
  return {max_err <= 1e-12 && rare_below == 0 && max_gap < 0.01,
          fmt("max |exact - enumeration| %.2e, rare < exact in %d cases, max relative gap at p<=1e-3 %.3e%%", max_err,
              rare_below, 100.0 * max_gap)};
}

// ---------------------------------------------------------------- 3

Outcome eta_conservation() {
  std::mt19937_64 rng(3);
  double max_err = 0.0;
  std::size_t sequences = 0;
  for (int i = 0; i < 100; ++i) {
    const EventTree t = rftest::random_event_tree(rng);
    const auto seq = eta::enumerate_sequences(t);
    sequences += seq.size();
    double sum = 0.0;
    for (const auto& s : seq) sum += s.value;
    max_err = std::max(max_err, std::abs(sum - eta::point_initiator(t)));
  }
  return {max_err <= 1e-12, fmt("100 trees, %zu sequences, max |sum - initiator| %.2e", sequences, max_err)};
}

// ---------------------------------------------------------------- 4

Outcome bn_oracle() {
  std::mt19937_64 rng(4);
  double max_joint = 0.0, max_order = 0.0;
  int queries = 0;
  for (int i = 0; i < 100; ++i) {
    const BayesNet net = rftest::random_bayes_net(rng, 10, 3);
    const auto joint = bn::joint_enumerate(net, 59049);  // 3^10
    for (int pattern = 0; pattern < 5; ++pattern) {
      std::vector<std::size_t> idx(net.nodes.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      const BnNode& target = net.nodes[idx[0]];
      bn::Evidence ev;
      for (std::size_t k = 1; k < idx.size() && int(k) <= pattern; ++k) {
        const BnNode& n = net.nodes[idx[k]];
        ev[n.id] = n.states[rng() % n.states.size()];
      }
      const auto q = bn::query(net, target.id, ev);
      const auto j = joint.marginal(target.id, ev);
      std::vector<std::string> order;
      for (const auto& n : net.nodes) {
        if (n.id != target.id && !ev.count(n.id)) order.push_back(n.id);
      }
      std::shuffle(order.begin(), order.end(), rng);
      const auto r = bn::query(net, target.id, ev, order);
      for (std::size_t s = 0; s < q.probabilities.size(); ++s) {
        max_joint = std::max(max_joint, std::abs(q.probabilities[s] - j.probabilities[s]));
        max_order = std::max(max_order, std::abs(q.probabilities[s] - r.probabilities[s]));
      }
      ++queries;
    }
  }
  return {max_joint <= 1e-9 && max_order <= 1e-12,
          fmt("%d queries, max |query - joint| %.2e, max order difference %.2e", queries, max_joint, max_order)};
}

// ---------------------------------------------------------------- 5

double normal_score_correlation(const std::vector<double>& u, const std::vector<double>& v) {
  const std::size_t n = u.size();
  double ma = 0, mb = 0;
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = normal_quantile(u[i]);
    b[i] = normal_quantile(v[i]);
    ma += a[i];
    mb += b[i];
  }
  ma /= double(n);
  mb /= double(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

bool same_bytes(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Outcome mc_statistics() {
  const std::size_t n = 100'000;
  const RandomStream seed42(42);
  std::vector<std::string> notes;
  bool ok = true;

  const auto beta = quant::sample(UncertainQuantity::beta(2, 8), seed42, n);
  const double beta_mean = std::accumulate(beta.values.begin(), beta.values.end(), 0.0) / double(n);
  const double beta_bound = 3.0 * std::sqrt(16.0 / 1100.0) / std::sqrt(double(n));
  ok &= std::abs(beta_mean - 0.2) <= beta_bound;
  notes.push_back(fmt("beta mean %.5f (bound %.5f)", beta_mean, beta_bound));

  const auto cp = quant::aggregate_loss(UncertainQuantity::poisson(3), UncertainQuantity::point(1), seed42, n);
  const double cp_bound = 3.0 * std::sqrt(3.0) / std::sqrt(double(n));
  ok &= std::abs(cp.summary.mean - 3.0) <= cp_bound;
  const auto sev = UncertainQuantity::lognormal(0, 0.5);
  const auto cp2 = quant::aggregate_loss(UncertainQuantity::poisson(3), sev, seed42, n);
  const double cp2_bound = 3.0 * std::sqrt(3.0 * std::exp(0.5) / double(n));  // Var = lambda E[S^2]
  ok &= std::abs(cp2.summary.mean - 3.0 * sev.mean()) <= cp2_bound;
  notes.push_back(fmt("compound mean %.4f / %.4f", cp.summary.mean, cp2.summary.mean));

  const std::map<std::string, UncertainQuantity> marg{{"A", UncertainQuantity::beta(2, 8)}, {"B", UncertainQuantity::lognormal(0, 1)}};
  std::string rhos;
  for (double rho : {0.0, 0.5, 1.0}) {
    const auto js = quant::copula_sample({{"A", "B"}, {{1, rho}, {rho, 1}}}, marg, seed42, n);
    if (rho == 1.0) {
      const bool equal = js.uniform_column("A") == js.uniform_column("B");
      ok &= equal;
      rhos += equal ? " 1:equal" : " 1:columns differ";
    } else {
      const double r = normal_score_correlation(js.uniform_column("A"), js.uniform_column("B"));
      ok &= std::abs(r - rho) <= 3.0 / std::sqrt(double(n));
      rhos += fmt(" %.1f:%.4f", rho, r);
    }
  }
  notes.push_back("copula" + rhos);

  // Reruns: same seed on one and four threads, and a repeated copula draw.
  const auto m = dsl::parse(R"(
ftree TOP and { event A ~beta(2, 8) or { event B ~lognormal(-3, 1) event C ~triangular(0, 0.1, 0.3) } }
etree CONS branch X ~beta(8, 2) { outcome OK severity=0 fatalities outcome BAD severity=10 fatalities }
bowtie BT event CE causes TOP consequences CONS
)");
  quant::PropagateOptions opt;
  opt.trials = 20'000;
  opt.threads = 1;
  const auto p1 = quant::propagate(m, "BT", opt);
  opt.threads = 4;
  const auto p2 = quant::propagate(m, "BT", opt);
  const auto c1 = quant::copula_sample({{"A", "B"}, {{1, 0.5}, {0.5, 1}}}, marg, seed42, 1000);
  const auto c2 = quant::copula_sample({{"A", "B"}, {{1, 0.5}, {0.5, 1}}}, marg, seed42, 1000);
  const bool identical = same_bytes(p1.samples, p2.samples) && p1.mean_curve == p2.mean_curve &&
                         same_bytes(c1.values[0], c2.values[0]) && same_bytes(c1.values[1], c2.values[1]);
  ok &= identical;
  notes.push_back(identical ? "reruns byte-identical" : "reruns differ");

  std::string detail;
  for (const auto& s : notes) detail += (detail.empty() ? "" : "; ") + s;
  return {ok, detail};
}

// ---------------------------------------------------------------- 6

Outcome var_cvar() {
  std::vector<double> atoms(95, 0.0);
  atoms.insert(atoms.end(), 5, 100.0);
  const auto a = quant::var_cvar(atoms, 0.95);
  std::vector<double> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 1.0);
  const auto b = quant::var_cvar(ramp, 0.95);
  const bool fixtures = a.var == 0.0 && a.cvar == 100.0 && b.var == 95.0 && b.cvar == 98.0;

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> alpha(0.01, 0.999);
  std::lognormal_distribution<double> ln(0.0, 1.5);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(1 + rng() % 500);
    for (double& x : s) x = (rng() % 4 == 0) ? std::floor(ln(rng)) : ln(rng);  // some ties
    const auto m = quant::var_cvar(s, alpha(rng));
    if (!(m.cvar >= m.var)) ++violations;
  }
  return {fixtures && violations == 0,
          fmt("fixtures (VaR, CVaR) = (%g, %g) and (%g, %g); CVaR < VaR in %d of 1000 sets", a.var, a.cvar, b.var, b.cvar,
              violations)};
}

// ---------------------------------------------------------------- 7

Outcome banding() {
  const auto& table = estimate::BandTable::defaults();
  const auto& edges = table.likelihood;
  int bad_cells = 0;
  for (int k = 0; k <= 10'000; ++k) {
    const double p = k / 10'000.0;
    int containing = 0, which = -1;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const bool above = p >= edges[i];
      const bool below = i + 1 == edges.size() ? p <= 1.0 : p < edges[i + 1];
      if (above && below) {
        ++containing;
        which = int(i);
      }
    }
    if (containing != 1 || estimate::band_likelihood(p) != which) ++bad_cells;
  }
  int decreasing = 0;
  for (int l = 0; l < 9; ++l) {
    for (int h = 1; h <= 6; ++h) {
      if (l > 0 && estimate::matrix_cell(l, h) < estimate::matrix_cell(l - 1, h)) ++decreasing;
      if (h > 1 && estimate::matrix_cell(l, h) < estimate::matrix_cell(l, h - 1)) ++decreasing;
    }
  }
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int above_min = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    if (estimate::likelihood_chain(a, b, c) > std::min({a, b, c})) ++above_min;
  }
  return {bad_cells == 0 && decreasing == 0 && above_min == 0,
          fmt("10001 grid points, %d not in exactly one band; %d decreasing matrix steps; %d chains above min factor",
              bad_cells, decreasing, above_min)};
}

// ---------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome parser_round_trip() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fs::path(RF_FIXTURES) / "corpus")) {
    if (e.path().extension() == ".rsk") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::set<std::string> kinds;
  int not_fixed = 0, wrong_line = 0, injections = 0;
  for (const auto& f : files) {
    const std::string text = slurp(f);
    const auto m1 = dsl::parse(text, f.string());
    if (!m1.hazards.empty()) kinds.insert("hazard");
    if (!m1.fault_trees.empty()) kinds.insert("ftree");
    if (!m1.event_trees.empty()) kinds.insert("etree");
    if (!m1.bowties.empty()) kinds.insert("bowtie");
    if (!m1.fmeca.empty()) kinds.insert("fmeca");
    if (!m1.bayes_nets.empty()) kinds.insert("bnet");
    if (!m1.tolerances.empty()) kinds.insert("tolerance");
    if (!m1.kris.empty()) kinds.insert("kri");
    if (!m1.dsa_checks.empty()) kinds.insert("dsa");
    if (!m1.chains.empty()) kinds.insert("chain");
    if (!m1.losses.empty()) kinds.insert("loss");
    const std::string d2 = dsl::serialize(m1);
    const auto m2 = dsl::parse(d2);
    if (!(m1 == m2) || dsl::serialize(m2) != d2) ++not_fixed;

    std::vector<std::string> lines;
    std::stringstream ss(text);
    for (std::string l; std::getline(ss, l);) lines.push_back(l);
    for (std::size_t at = 0; at <= lines.size(); ++at) {
      for (const char* junk : {"  @", "bogus_keyword 12"}) {
        std::string doc;
        for (std::size_t i = 0; i < lines.size(); ++i) {
          if (i == at) doc += std::string(junk) + "\n";
          doc += lines[i] + "\n";
        }
        if (at == lines.size()) doc += std::string(junk) + "\n";
        ++injections;
        int line = 0;
        try {
          dsl::parse(doc);
        } catch (const dsl::ParseError& e) {
          line = e.span().line;
        }
        if (line != int(at) + 1) ++wrong_line;
      }
    }
  }
  return {files.size() >= 20 && kinds.size() == 11 && not_fixed == 0 && wrong_line == 0,
          fmt("%zu documents, %zu/11 block types, %d not at a fixed point, %d of %d injected errors mislocated",
              files.size(), kinds.size(), not_fixed, wrong_line, injections)};
}

// ---------------------------------------------------------------- 9

Outcome end_to_end() {
  const auto t0 = Clock::now();
  const fs::path dir(RF_FIXTURES);
  const auto model = dsl::parse_file((dir / "ai_misuse_bowtie.rsk").string());
  const auto tolerances = dsl::parse_file((dir / "ai_misuse_tolerance.rsk").string()).tolerances;
  const auto tight_file = dsl::parse_file((dir / "ai_misuse_tolerance_tight.rsk").string()).tolerances;

  quant::PropagateOptions opt;
  opt.trials = 10'000;
  opt.seed = 42;
  const auto profile = quant::propagate(model, "MISUSE", opt);
  const auto base = eval::compare_to_tolerance(profile.mean_curve, tolerances.at(0));

  // Flip one point: the 1000-fatality limit drops below the profile.
  ToleranceCurve flipped = tolerances.at(0);
  flipped.points.at(1).max_exceedance = 0.001;
  const auto after = eval::compare_to_tolerance(profile.mean_curve, flipped);
  const bool file_agrees = eval::compare_to_tolerance(profile.mean_curve, tight_file.at(0)).acceptable == after.acceptable;

  // Hand derivation with the point values (Beta means 0.1 and 0.6):
  //   top = 0.3 * (1 - 0.9 * 0.95) * 0.6 = 0.0261
  //   DETECTION-DOWN: ACTOR = 1, DETECT fails  -> 0.145 * 0.6 * 0.3 = 0.0261  (<= 0.05 pass)
  //   ALL-BARRIERS-DOWN: also MITIGATE fails  -> 0.145 * 0.6       = 0.087   (fail)
  //   LEAKED-WEIGHTS: top with the OR forced  -> 0.3 * 0.6         = 0.18    (<= 0.2 pass)
  const std::map<std::string, std::pair<double, bool>> hand{
      {"DETECTION-DOWN", {0.0261, true}}, {"ALL-BARRIERS-DOWN", {0.087, false}}, {"LEAKED-WEIGHTS", {0.18, true}}};
  int dsa_mismatch = 0;
  std::string dsa_text;
  for (const auto& check : model.dsa_checks) {
    const auto r = eval::dsa_check(check, model);
    const auto& [value, pass] = hand.at(check.id);
    if (std::abs(r.measured - value) > 1e-12 || r.pass != pass) ++dsa_mismatch;
    dsa_text += fmt(" %s=%.4g(%s)", check.id.c_str(), r.measured, r.pass ? "pass" : "fail");
  }
  const double secs = seconds_since(t0);
  const double tail = profile.mean_curve.at(1000);
  const bool ok = base.acceptable && !after.acceptable && file_agrees && dsa_mismatch == 0 && secs < 10.0 &&
                  dsa_text.size() > 0 && profile.samples.size() == 10'000;
  return {ok, fmt("P(>=1000) = %.5f; tolerance %s, flipped %s; DSA%s; %.2f s", tail,
                  base.acceptable ? "acceptable" : "exceeded", after.acceptable ? "acceptable" : "exceeded",
                  dsa_text.c_str(), secs)};
}

// ---------------------------------------------------------------- 10

Outcome pooling() {
  // Expert A gives 1.0 to every true outcome, expert B 0.5.
  const std::vector<std::vector<double>> answers{{1.0, 1.0, 1.0, 1.0}, {0.5, 0.5, 0.5, 0.5}};
  const std::vector<bool> truths(4, true);
  const auto w = estimate::calibration_weights(answers, truths);
  const bool brier = w.size() == 2 && w[0] == 0.8 && w[1] == 0.2;

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int outside = 0;
  for (int panel = 0; panel < 500; ++panel) {
    const std::size_t k = 1 + rng() % 6;
    std::vector<estimate::ExpertEstimate> experts;
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t e = 0; e < k; ++e) {
      UncertainQuantity q;
      switch (rng() % 5) {
        case 0: q = UncertainQuantity::point(u(rng)); break;
        case 1: q = UncertainQuantity::beta(0.5 + 10 * u(rng), 0.5 + 10 * u(rng)); break;
        case 2: {
          const double a = u(rng), b = u(rng);
          q = UncertainQuantity::interval(std::min(a, b), std::max(a, b));
          break;
        }
        case 3: {
          double v[3] = {u(rng), u(rng), u(rng)};
          std::sort(v, v + 3);
          q = UncertainQuantity::triangular(v[0], v[1], v[2]);
          break;
        }
        default: q = UncertainQuantity::lognormal(-3 + u(rng), 0.2 + u(rng)); break;
      }
      experts.push_back({"E" + std::to_string(e), q, {}});
      weights.push_back(u(rng));
      total += weights.back();
    }
    for (double& x : weights) x /= total;
    const double pooled = estimate::pool_experts(experts, weights).mean();
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& e : experts) {
      lo = std::min(lo, e.quantity.mean());
      hi = std::max(hi, e.quantity.mean());
    }
    if (pooled < lo - 1e-12 || pooled > hi + 1e-12) ++outside;
  }
  return {brier && outside == 0, fmt("Brier weights (%.6f, %.6f) against expected (0.8, 0.2); %d of 500 pooled means outside the member range",
                                     w.at(0), w.at(1), outside)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"minimal cut sets vs brute force", mcs_oracle},
      {"top-event probability exact/rare", top_probability},
      {"event-tree conservation", eta_conservation},
      {"Bayesian-net inference vs joint", bn_oracle},
      {"Monte Carlo statistics and reruns", mc_statistics},
      {"VaR/CVaR fixtures and dominance", var_cvar},
      {"bands and risk matrix", banding},
      {"parser round trip and error lines", parser_round_trip},
      {"AI-misuse bow-tie walkthrough", end_to_end},
      {"expert pooling and calibration", pooling},
  };
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > int(criteria.size())) {
      std::fprintf(stderr, "usage: acceptance [1-%zu]\n", criteria.size());
      return 2;
    }
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && int(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed ? 1 : 0;
}
