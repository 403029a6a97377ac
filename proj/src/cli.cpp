#include "riskforge/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "riskforge/bayes_net.hpp"
#include "riskforge/dsl.hpp"
#include "riskforge/estimate.hpp"
#include "riskforge/event_tree.hpp"
#include "riskforge/fault_tree.hpp"
#include "riskforge/quant.hpp"
#include "riskforge/report.hpp"
#include "riskforge/risk_eval.hpp"
#include "riskforge/validate.hpp"

namespace riskforge::cli {

namespace {

using report::Json;

/// A command finished with a verdict the caller must see in the exit code.
struct Outcome {
  int code = kOk;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": invalid JSON: " + e.what());
  }
}

/// Parses and validates; validation errors go to `err` and stop the command.
std::optional<ScenarioModel> load_model(const std::string& path, std::ostream& err) {
  ScenarioModel model = dsl::parse_file(path);
  const ValidationReport rep = validate(model);
  if (rep.has_errors()) {
    for (const Finding& f : rep.findings()) {
      if (f.level != FindingLevel::Error) continue;
      err << path;
      if (f.line > 0) err << ":" << f.line << ":" << f.column;
      err << ": " << f.location << ": " << f.message << "\n";
    }
    return std::nullopt;
  }
  return model;
}

quant::CorrelationSpec load_correlations(const std::string& path) {
  const Json j = read_json(path);
  quant::CorrelationSpec spec;
  try {
    spec.variables = j.at("variables").get<std::vector<std::string>>();
    spec.matrix = j.at("matrix").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": expected {\"variables\": [...], \"matrix\": [[...]]}: " + e.what());
  }
  return spec;
}

estimate::BandTable band_table(const std::string& flag) {
  if (!flag.empty()) return estimate::load_band_table(flag);
  if (const char* env = std::getenv("RISKFORGE_BANDS"); env && *env) return estimate::load_band_table(env);
  return estimate::BandTable::defaults();
}

struct SimOptions {
  std::size_t trials = 10'000;
  std::uint64_t seed = 42;
  std::string correlations;
  unsigned threads = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--n", trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", seed, "Random seed (echoed in the output)");
    cmd.add_option("--correlations", correlations, "Correlation matrix JSON")->check(CLI::ExistingFile);
    cmd.add_option("--threads", threads, "Worker threads, 0 for all cores");
  }

  quant::PropagateOptions build() const {
    quant::PropagateOptions o;
    o.seed = seed;
    o.trials = trials;
    o.threads = threads;
    if (!correlations.empty()) o.correlations = load_correlations(correlations);
    return o;
  }
};

const quant::RiskCurve& pick_curve(const quant::RiskProfile& p, const std::string& which) {
  if (p.mean_curve.empty()) {
    throw DomainError(std::string(quant::to_string(p.kind)) + " " + p.target +
                      " yields no exceedance curve (needs probability-valued outcomes in one harm unit)");
  }
  if (which == "mean") return p.mean_curve;
  if (p.p05_curve.empty()) throw DomainError("percentile curves exist only for event trees and bow-ties");
  if (which == "p05") return p.p05_curve;
  if (which == "p50") return p.p50_curve;
  return p.p95_curve;
}

/// The one element of the model that produces exceedance curves.
std::string default_target(const ScenarioModel& m) {
  std::vector<std::string> ids;
  for (const auto& b : m.bowties) ids.push_back(b.id);
  std::set<std::string> consequence;
  for (const auto& b : m.bowties) consequence.insert(b.event_tree);
  for (const auto& e : m.event_trees) {
    if (!consequence.count(e.id)) ids.push_back(e.id);
  }
  for (const auto& l : m.losses) ids.push_back(l.id);
  if (ids.size() != 1) throw DomainError("model has " + std::to_string(ids.size()) + " curve-producing elements; pass --target");
  return ids.front();
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantitative risk modelling: fault and event trees, bow-ties, Bayesian networks, Monte Carlo"};
  app.name("riskforge");
  app.require_subcommand(1);
  app.fallthrough(false);

  std::function<Outcome()> action;
  std::string file;

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check a model and list findings");
  validate_cmd->add_option("file", file, "Model file (.rsk)")->required();
  validate_cmd->callback([&] {
    action = [&] {
      const ScenarioModel m = dsl::parse_file(file);
      const ValidationReport rep = validate(m);
      Json j;
      j["file"] = file;
      j["valid"] = !rep.has_errors();
      j["findings"] = report::to_json(rep);
      out << report::dump(j);
      return Outcome{rep.has_errors() ? kViolation : kOk};
    };
  });

  // mcs
  std::string tree;
  auto* mcs_cmd = app.add_subcommand("mcs", "Minimal cut sets of a fault tree");
  mcs_cmd->add_option("file", file, "Model file")->required();
  mcs_cmd->add_option("--tree", tree, "Fault tree id")->required();
  mcs_cmd->callback([&] {
    action = [&] {
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      const FaultTree* ft = m->find_fault_tree(tree);
      if (!ft) throw ReferenceError("no fault tree " + tree);
      const auto sets = fta::minimal_cut_sets(*ft);
      out << report::dump(report::to_json(sets));
      return Outcome{};
    };
  });

  // quantify
  std::string target;
  SimOptions sim;
  auto* quantify_cmd = app.add_subcommand("quantify", "Point results and Monte Carlo propagation for one element");
  quantify_cmd->add_option("file", file, "Model file")->required();
  quantify_cmd->add_option("--target", target, "Element id")->required();
  sim.add_to(*quantify_cmd);
  quantify_cmd->callback([&] {
    action = [&] {
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      Json j;
      j["seed"] = sim.seed;
      if (const FaultTree* ft = m->find_fault_tree(target)) {
        fta::Analyzer analyzer(*ft);
        const auto probs = analyzer.ordered(fta::point_assignment(*ft));
        Json point;
        if (analyzer.event_count() <= analyzer.limits().exact_max_events) point["exact"] = analyzer.exact(probs);
        point["rare_event"] = fta::Analyzer::rare(analyzer.cut_set_masks(), probs);
        j["point"] = std::move(point);
      } else if (const LikelihoodChainSpec* c = m->find_chain(target)) {
        j["point"] = Json{{"chain", estimate::likelihood_chain(std::clamp(c->capability.mean(), 0.0, 1.0), std::clamp(c->misuse.mean(), 0.0, 1.0),
                                                                  std::clamp(c->harm.mean(), 0.0, 1.0)).value()}};
      }
      const quant::RiskProfile p = quant::propagate(*m, target, sim.build());
      j["profile"] = report::to_json(p);
      if (p.kind == quant::ElementKind::Loss) {
        const auto metrics = quant::var_cvar(p.samples, 0.95);
        j["loss"] = Json{{"alpha", metrics.alpha}, {"var", metrics.var}, {"cvar", metrics.cvar}};
      }
      out << report::dump(j);
      return Outcome{};
    };
  });

  // sequences
  std::string etree;
  auto* seq_cmd = app.add_subcommand("sequences", "Accident sequences of an event tree");
  seq_cmd->add_option("file", file, "Model file")->required();
  seq_cmd->add_option("--etree", etree, "Event tree id")->required();
  seq_cmd->callback([&] {
    action = [&] {
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      const EventTree* et = m->find_event_tree(etree);
      if (!et) throw ReferenceError("no event tree " + etree);
      if (!et->initiator) throw StructureError("event tree " + etree + " takes its initiator from a bow-tie; use the bowtie command");
      const auto seqs = eta::enumerate_sequences(*et);
      Json j;
      j["etree"] = et->id;
      j[et->initiator->frequency ? "initiating_frequency" : "initiating_probability"] = eta::point_initiator(*et);
      j["sequences"] = report::to_json(seqs);
      Json totals;
      for (const auto& [id, v] : eta::outcome_frequencies(seqs)) totals[id] = v;
      j["outcomes"] = std::move(totals);
      out << report::dump(j);
      return Outcome{};
    };
  });

  // bowtie
  std::string bowtie_id;
  auto* bowtie_cmd = app.add_subcommand("bowtie", "Compose a bow-tie and list its sequences");
  bowtie_cmd->add_option("file", file, "Model file")->required();
  bowtie_cmd->add_option("--id", bowtie_id, "Bow-tie id")->required();
  bowtie_cmd->callback([&] {
    action = [&] {
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      const BowTie* bt = m->find_bowtie(bowtie_id);
      if (!bt) throw ReferenceError("no bow-tie " + bowtie_id);
      const auto composed = eta::compose_bowtie(*bt, *m);
      const auto seqs = eta::enumerate_sequences(composed.tree);
      Json j;
      j["bowtie"] = bt->id;
      j["critical_event"] = bt->critical_event;
      j["mode"] = eta::to_string(composed.mode);
      j["top_probability"] = composed.top_probability;
      j["sequences"] = report::to_json(seqs);
      Json totals;
      for (const auto& [id, v] : eta::outcome_frequencies(seqs)) totals[id] = v;
      j["outcomes"] = std::move(totals);
      out << report::dump(j);
      return Outcome{};
    };
  });

  // infer
  std::string bnet, query;
  std::vector<std::string> evidence;
  auto* infer_cmd = app.add_subcommand("infer", "Posterior of a Bayesian-network node");
  infer_cmd->add_option("file", file, "Model file")->required();
  infer_cmd->add_option("--bnet", bnet, "Network id")->required();
  infer_cmd->add_option("--query", query, "Target node")->required();
  infer_cmd->add_option("--evidence", evidence, "NODE=STATE, repeatable");
  infer_cmd->callback([&] {
    action = [&] {
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      const BayesNet* net = m->find_bayes_net(bnet);
      if (!net) throw ReferenceError("no Bayesian network " + bnet);
      bn::Evidence ev;
      for (const auto& e : evidence) {
        const auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == e.size()) {
          throw CLI::ValidationError("--evidence", "expected NODE=STATE, got " + e);
        }
        ev[e.substr(0, eq)] = e.substr(eq + 1);
      }
      Json j = report::to_json(bn::query(*net, query, ev));
      Json evj = Json::object();
      for (const auto& [k, v] : ev) evj[k] = v;
      j["evidence"] = std::move(evj);
      out << report::dump(j);
      return Outcome{};
    };
  });

  // fmeca
  auto* fmeca_cmd = app.add_subcommand("fmeca", "Rank failure modes by risk priority number");
  fmeca_cmd->add_option("file", file, "Model file")->required();
  fmeca_cmd->callback([&] {
    action = [&] {
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      Json sheets = Json::array();
      for (const auto& w : canonicalize(*m).fmeca) {
        Json modes = Json::array();
        for (const auto& r : estimate::rank_failure_modes(w.rows)) {
          Json row{{"id", r.id}, {"S", r.severity}, {"O", r.occurrence}, {"D", r.detection},
                   {"rpn", estimate::rpn(r.severity, r.occurrence, r.detection)}};
          if (!r.notes.empty()) row["notes"] = r.notes;
          modes.push_back(std::move(row));
        }
        sheets.push_back(Json{{"id", w.id}, {"modes", std::move(modes)}});
      }
      out << report::dump(Json{{"worksheets", std::move(sheets)}});
      return Outcome{};
    };
  });

  // matrix
  double likelihood = 0.0, severity = 0.0;
  std::string unit_name, bands;
  auto* matrix_cmd = app.add_subcommand("matrix", "Place a likelihood and severity in the risk-level matrix");
  matrix_cmd->add_option("file", file, "Model file (optional; validated when given)");
  matrix_cmd->add_option("--likelihood", likelihood, "Probability in [0,1]")->required();
  matrix_cmd->add_option("--severity", severity, "Harm magnitude")->required();
  matrix_cmd->add_option("--unit", unit_name, "Harm unit")
      ->required()
      ->check(CLI::IsMember({"monetary-loss", "fatalities", "affected-persons", "abstract-index"}));
  matrix_cmd->add_option("--bands", bands, "Band table JSON (default: $RISKFORGE_BANDS or built-in)");
  matrix_cmd->callback([&] {
    action = [&] {
      if (!file.empty() && !load_model(file, err)) return Outcome{kViolation};
      if (!(likelihood >= 0.0 && likelihood <= 1.0)) throw CLI::ValidationError("--likelihood", "must lie in [0,1]");
      if (!(severity >= 0.0)) throw CLI::ValidationError("--severity", "must be non-negative");
      const auto table = band_table(bands);
      const HarmUnit u = *parse_harm_unit(unit_name);
      const int ll = estimate::band_likelihood(likelihood, table);
      const int hsl = estimate::band_severity(severity, u, table);
      const int rl = estimate::matrix_cell(ll, hsl, table);
      Json j{{"likelihood", likelihood},          {"ll", "LL-" + std::to_string(ll)},
             {"severity", severity},              {"unit", unit_name},
             {"hsl", "HSL-" + std::to_string(hsl)}, {"risk_level", "RL-" + std::to_string(rl)}};
      out << report::dump(j);
      return Outcome{};
    };
  });

  // curves
  std::string csv_path, which = "mean";
  auto* curves_cmd = app.add_subcommand("curves", "Write an exceedance curve as CSV");
  curves_cmd->add_option("file", file, "Model file")->required();
  curves_cmd->add_option("--target", target, "Event tree, bow-tie or loss model id")->required();
  curves_cmd->add_option("--out", csv_path, "CSV output path")->required();
  curves_cmd->add_option("--curve", which, "mean, p05, p50 or p95")->check(CLI::IsMember({"mean", "p05", "p50", "p95"}));
  sim.add_to(*curves_cmd);
  curves_cmd->callback([&] {
    action = [&] {
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      const quant::RiskProfile p = quant::propagate(*m, target, sim.build());
      const quant::RiskCurve& c = pick_curve(p, which);
      write_text(csv_path, report::curve_csv(c));
      Json j{{"target", p.target}, {"seed", sim.seed}, {"trials", p.samples.size()}, {"curve", which},
             {"unit", p.unit ? Json(to_string(*p.unit)) : Json(nullptr)}, {"points", c.points().size()}, {"out", csv_path}};
      out << report::dump(j);
      return Outcome{};
    };
  });

  // evaluate
  std::string tolerance_path, tolerance_id, kri_path;
  bool run_dsa = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "Verdict against tolerance curves, design-basis checks and KRIs");
  eval_cmd->add_option("file", file, "Model file")->required();
  eval_cmd->add_option("--tolerance", tolerance_path, "File with tolerance curves (.rsk)");
  eval_cmd->add_option("--curve", tolerance_id, "Tolerance curve id when the file holds several");
  eval_cmd->add_option("--target", target, "Element whose mean exceedance curve is compared");
  eval_cmd->add_flag("--dsa", run_dsa, "Run every design-basis check in the model");
  eval_cmd->add_option("--kri", kri_path, "Indicator values JSON {\"id\": value}");
  sim.add_to(*eval_cmd);
  eval_cmd->callback([&] {
    action = [&] {
      if (tolerance_path.empty() && !run_dsa && kri_path.empty()) {
        throw CLI::ValidationError("evaluate", "nothing to evaluate: give --tolerance, --dsa or --kri");
      }
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      eval::Verdict verdict;
      Json j;
      j["seed"] = sim.seed;
      if (!tolerance_path.empty()) {
        auto tol_model = load_model(tolerance_path, err);
        if (!tol_model) return Outcome{kViolation};
        const ToleranceCurve* tol = nullptr;
        if (!tolerance_id.empty()) {
          tol = tol_model->find_tolerance(tolerance_id);
          if (!tol) throw ReferenceError("no tolerance curve " + tolerance_id + " in " + tolerance_path);
        } else if (tol_model->tolerances.size() == 1) {
          tol = &tol_model->tolerances.front();
        } else {
          throw DomainError(tolerance_path + " holds " + std::to_string(tol_model->tolerances.size()) +
                            " tolerance curves; pass --curve");
        }
        const std::string element = target.empty() ? default_target(*m) : target;
        const quant::RiskProfile p = quant::propagate(*m, element, sim.build());
        const quant::RiskCurve& curve = pick_curve(p, "mean");
        if (tol->unit && p.unit && *tol->unit != *p.unit) {
          throw DomainError("tolerance " + tol->id + " is in " + std::string(to_string(*tol->unit)) + " but " +
                            element + " is in " + std::string(to_string(*p.unit)));
        }
        verdict.tolerance = eval::compare_to_tolerance(curve, *tol);
        j["target"] = element;
        j["trials"] = p.samples.size();
      }
      if (run_dsa) {
        for (const auto& check : canonicalize(*m).dsa_checks) verdict.checks.push_back(eval::dsa_check(check, *m));
      }
      if (!kri_path.empty()) {
        const Json values = read_json(kri_path);
        if (!values.is_object()) throw Error(kri_path + ": expected {\"id\": value}");
        std::map<std::string, double, std::less<>> v;
        for (const auto& [k, x] : values.items()) {
          if (!x.is_number()) throw Error(kri_path + ": value of " + k + " is not a number");
          v[k] = x.get<double>();
        }
        verdict.triggered = eval::kri_check(v, m->kris);
      }
      const Json verdict_json = report::to_json(verdict);
      for (const auto& [k, v] : verdict_json.items()) j[k] = v;
      out << report::dump(j);
      return Outcome{verdict.violated() ? kViolation : kOk};
    };
  });

  // update
  std::string quantity, model_out;
  long long successes = 0, trials = 0;
  auto* update_cmd = app.add_subcommand("update", "Conjugate Beta update of one quantity; writes a new model");
  update_cmd->add_option("file", file, "Model file")->required();
  update_cmd->add_option("--quantity", quantity, "ELEMENT/NAME or a unique NAME")->required();
  update_cmd->add_option("--successes", successes, "Observed successes")->required();
  update_cmd->add_option("--trials", trials, "Observed trials")->required();
  update_cmd->add_option("--out", model_out, "Output model path")->required();
  update_cmd->callback([&] {
    action = [&] {
      auto m = load_model(file, err);
      if (!m) return Outcome{kViolation};
      const ScenarioModel next = eval::update_model(*m, quantity, successes, trials);
      write_text(model_out, dsl::serialize(next));
      Json j{{"quantity", quantity}, {"successes", successes}, {"trials", trials}, {"out", model_out}};
      out << report::dump(j);
      return Outcome{};
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    return action().code;
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const LimitExceeded& e) {
    err << "limit exceeded: " << e.what() << "\n";
    return kLimit;
  } catch (const dsl::ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInput;
  }
}

}  // namespace riskforge::cli
