#include "riskforge/quant.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "riskforge/distributions.hpp"
#include "riskforge/event_tree.hpp"

namespace riskforge::quant {

namespace {

constexpr double kUniformMax = 1.0 - 0x1.0p-53;
constexpr double kUniformMin = 0x1.0p-1074 * 0x1.0p+100;  // far below any reachable 53-bit draw

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Runs fn(begin, end, chunk) over trial chunks on a fixed pool of threads.
/// Chunk c always covers the same trials, so outputs written per trial are
/// independent of the thread count.
template <typename Fn>
void for_chunks(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  unsigned workers = threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(chunks, 1)));
  const auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * kChunkSize;
    fn(begin, std::min(n, begin + kChunkSize), c);
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// One uncertain input of a Monte Carlo element.
struct Variable {
  std::string id;
  UncertainQuantity quantity;
  bool probability = false;
  RandomStream stream;
  std::vector<double> sorted;  // empirical atoms, for fast inverse CDF

  double inverse(double u) const {
    if (quantity.is_point()) return quantity.params()[0];
    if (quantity.kind() == QuantityKind::Empirical) {
      const auto n = static_cast<double>(sorted.size());
      auto k = static_cast<std::size_t>(std::ceil(u * n));
      k = std::clamp<std::size_t>(k, 1, sorted.size());
      return sorted[k - 1];
    }
    return quantity.quantile(u);
  }
};

Variable make_variable(std::string id, const UncertainQuantity& q, bool probability, const RandomStream& base) {
  auto issues = q.problems();
  if (!issues.empty()) throw DomainError("quantity " + id + " is invalid: " + issues.front());
  Variable v{id, q, probability, variable_stream(base, id), {}};
  if (q.kind() == QuantityKind::Empirical) {
    v.sorted.assign(q.params().begin(), q.params().end());
    std::sort(v.sorted.begin(), v.sorted.end());
  }
  return v;
}

/// Draws every variable of one trial, jointly through the copula when a
/// correlation spec is given.
class TrialSampler {
 public:
  TrialSampler(std::vector<Variable> vars, const std::optional<CorrelationSpec>& corr) : vars_(std::move(vars)) {
    if (!corr) return;
    for (const auto& id : corr->variables) {
      auto it = std::find_if(vars_.begin(), vars_.end(), [&](const Variable& v) { return v.id == id; });
      if (it == vars_.end()) throw ReferenceError("correlation names unknown variable " + id);
      correlated_.push_back(static_cast<std::size_t>(it - vars_.begin()));
    }
    chol_ = cholesky(*corr);
  }

  const std::vector<Variable>& variables() const { return vars_; }

  /// Fills out[i] for variable i; returns the number of clamped draws.
  std::size_t draw(std::size_t trial, std::span<double> out, std::vector<double>& scratch) const {
    std::vector<double>& u = scratch;
    u.resize(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      u[i] = vars_[i].quantity.is_point() ? 0.5 : trial_uniform(vars_[i].stream, trial);
    }
    if (!correlated_.empty()) {
      const std::size_t k = correlated_.size();
      std::vector<double> z(k);
      for (std::size_t a = 0; a < k; ++a) z[a] = normal_quantile(u[correlated_[a]]);
      for (std::size_t a = 0; a < k; ++a) {
        double x = 0.0;
        for (std::size_t b = 0; b <= a; ++b) x += chol_[a][b] * z[b];
        u[correlated_[a]] = std::clamp(normal_cdf(x), kUniformMin, kUniformMax);
      }
    }
    std::size_t truncated = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      double x = vars_[i].inverse(u[i]);
      if (vars_[i].probability && (x < 0.0 || x > 1.0)) {
        x = std::clamp(x, 0.0, 1.0);
        ++truncated;
      }
      out[i] = x;
    }
    return truncated;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<std::size_t> correlated_;
  std::vector<std::vector<double>> chol_;
};

void add_variable(std::vector<Variable>& vars, const std::string& id, const UncertainQuantity& q, bool probability,
                  const RandomStream& base) {
  auto it = std::find_if(vars.begin(), vars.end(), [&](const Variable& v) { return v.id == id; });
  if (it != vars.end()) {
    if (!(it->quantity == q)) throw StructureError("variable " + id + " is given two different quantities");
    return;
  }
  vars.push_back(make_variable(id, q, probability, base));
}

std::size_t index_of(const std::vector<Variable>& vars, std::string_view id) {
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].id == id) return i;
  }
  throw ReferenceError("unknown variable " + std::string(id));
}

/// Sum of per-chunk counts, in chunk order.
std::size_t total(const std::vector<std::size_t>& per_chunk) {
  return std::accumulate(per_chunk.begin(), per_chunk.end(), std::size_t{0});
}

std::size_t chunk_count(std::size_t n) { return (n + kChunkSize - 1) / kChunkSize; }

void require_trials(std::size_t n) {
  if (n == 0) throw DomainError("trial count must be at least 1");
}

// ------------------------------------------------------------ event-tree evaluation

/// Event tree flattened to root-to-leaf paths, in enumeration order.
struct FlatEventTree {
  struct Leaf {
    std::vector<std::pair<std::size_t, bool>> steps;  // node, success?
    double severity = 0.0;
    HarmUnit unit = HarmUnit::AbstractIndex;
  };
  std::vector<Leaf> leaves;
  std::vector<std::size_t> node_variable;  // node -> variable index of its condition
  std::vector<double> grid;                // distinct severities, ascending
  std::vector<std::size_t> leaf_grid;      // leaf -> grid index
  bool single_unit = true;
  HarmUnit unit = HarmUnit::AbstractIndex;

  explicit FlatEventTree(const EventTree& tree) {
    if (tree.nodes.empty()) throw StructureError("event tree " + tree.id + " has no branch points");
    std::vector<std::pair<std::size_t, bool>> path;
    std::vector<bool> visited(tree.nodes.size(), false);
    auto walk = [&](auto&& self, std::size_t n) -> void {
      if (n >= tree.nodes.size() || visited[n]) throw StructureError("event tree " + tree.id + " is not a tree");
      visited[n] = true;
      const auto follow = [&](const BranchChild& child, bool ok) {
        path.emplace_back(n, ok);
        if (const auto* leaf = std::get_if<OutcomeLeaf>(&child)) {
          leaves.push_back(Leaf{path, leaf->severity.magnitude(), leaf->severity.unit()});
        } else {
          self(self, std::get<std::size_t>(child));
        }
        path.pop_back();
      };
      follow(tree.nodes[n].on_success, true);
      follow(tree.nodes[n].on_failure, false);
    };
    walk(walk, 0);
    unit = leaves.front().unit;
    for (const auto& l : leaves) {
      if (l.unit != unit) single_unit = false;
      grid.push_back(l.severity);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (const auto& l : leaves) {
      leaf_grid.push_back(static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), l.severity) - grid.begin()));
    }
  }

  /// Expected harm; fills `exceed` (size grid) with P(severity >= grid[g]).
  double evaluate(double initiating, std::span<const double> success, std::span<double> exceed,
                  std::vector<double>& bucket) const {
    bucket.assign(grid.size(), 0.0);
    double harm = 0.0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      double v = initiating;
      for (const auto& [node, ok] : leaves[i].steps) v = v * (ok ? success[node] : 1.0 - success[node]);
      harm += v * leaves[i].severity;
      bucket[leaf_grid[i]] += v;
    }
    double run = 0.0;
    for (std::size_t g = grid.size(); g-- > 0;) {
      run += bucket[g];
      if (!exceed.empty()) exceed[g] = run;
    }
    return harm;
  }
};

struct CurveSet {
  RiskCurve mean, p05, p50, p95;
};

/// Mean and percentile curves from a trials x grid matrix of exceedances.
CurveSet curves_from_matrix(const std::vector<double>& grid, const std::vector<double>& matrix, std::size_t n) {
  const std::size_t g_count = grid.size();
  std::vector<double> mean(g_count), q05(g_count), q50(g_count), q95(g_count);
  std::vector<double> column(n);
  for (std::size_t g = 0; g < g_count; ++g) {
    double m = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      column[t] = matrix[t * g_count + g];
      m += (column[t] - m) / static_cast<double>(t + 1);
    }
    mean[g] = m;
    std::sort(column.begin(), column.end());
    q05[g] = empirical_quantile(column, 0.05);
    q50[g] = empirical_quantile(column, 0.50);
    q95[g] = empirical_quantile(column, 0.95);
  }
  const auto build = [&](std::vector<double>& v) {
    std::vector<CurvePoint> pts;
    double cap = 1.0;
    for (std::size_t g = 0; g < g_count; ++g) {
      // Running minimum absorbs last-bit rounding in the column means.
      cap = std::min(cap, std::clamp(v[g], 0.0, 1.0));
      pts.push_back(CurvePoint{grid[g], cap});
    }
    return RiskCurve(std::move(pts));
  };
  return CurveSet{build(mean), build(q05), build(q50), build(q95)};
}

void attach_curves(RiskProfile& p, const CurveSet& c) {
  p.mean_curve = c.mean;
  p.p05_curve = c.p05;
  p.p50_curve = c.p50;
  p.p95_curve = c.p95;
}

/// Shared Monte Carlo loop for event trees, optionally fed by a fault tree.
RiskProfile run_event_tree(const std::string& target, ElementKind kind, const EventTree& et, const FaultTree* ft,
                           const PropagateOptions& opt) {
  require_trials(opt.trials);
  const RandomStream base(opt.seed);
  FlatEventTree flat(et);
  std::vector<Variable> vars;

  std::optional<fta::Analyzer> analyzer;
  std::vector<std::uint64_t> masks;
  std::vector<std::size_t> event_var;
  bool use_exact = true;
  if (ft) {
    analyzer.emplace(*ft, opt.limits);
    for (const auto& id : analyzer->events()) {
      const BasicEvent& e = ft->events[*ft->find_event(id)];
      if (!e.quantity) throw ReferenceError("basic event " + id + " has no probability");
      add_variable(vars, id, *e.quantity, true, base);
    }
    use_exact = eta::compose_mode(analyzer->event_count(), opt.limits) == eta::ComposeMode::Exact;
    if (!use_exact) masks = analyzer->cut_set_masks();
  }
  for (const BranchNode& node : et.nodes) add_variable(vars, node.condition, node.success, true, base);
  bool frequency = false;
  if (!ft) {
    if (!et.initiator) throw StructureError("event tree " + et.id + " has no initiating value");
    frequency = et.initiator->frequency;
    add_variable(vars, "initiator", et.initiator->quantity, !frequency, base);
  }
  TrialSampler sampler(std::move(vars), opt.correlations);
  const auto& vs = sampler.variables();
  if (ft) {
    for (const auto& id : analyzer->events()) event_var.push_back(index_of(vs, id));
  }
  std::vector<std::size_t> node_var;
  for (const BranchNode& node : et.nodes) node_var.push_back(index_of(vs, node.condition));
  const std::size_t init_var = ft ? 0 : index_of(vs, "initiator");

  const bool curves = flat.single_unit && !frequency;
  const std::size_t g_count = flat.grid.size();
  RiskProfile profile;
  profile.target = target;
  profile.kind = kind;
  profile.seed = opt.seed;
  profile.frequency = frequency;
  if (ft) profile.mode = use_exact ? "exact" : "rare-event";
  profile.samples.resize(opt.trials);
  std::vector<double> matrix(curves ? opt.trials * g_count : 0);
  std::vector<std::size_t> truncated(chunk_count(opt.trials), 0);

  for_chunks(opt.trials, opt.threads, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    std::vector<double> x(vs.size()), scratch, probs(event_var.size()), success(et.nodes.size()), bucket;
    for (std::size_t t = begin; t < end; ++t) {
      truncated[chunk] += sampler.draw(t, x, scratch);
      double init;
      if (ft) {
        for (std::size_t i = 0; i < event_var.size(); ++i) probs[i] = x[event_var[i]];
        init = use_exact ? analyzer->exact(probs) : fta::Analyzer::rare(masks, probs);
      } else {
        init = x[init_var];
        if (frequency && init < 0.0) init = 0.0;
      }
      for (std::size_t n = 0; n < node_var.size(); ++n) success[n] = x[node_var[n]];
      std::span<double> row = curves ? std::span<double>(matrix).subspan(t * g_count, g_count) : std::span<double>();
      profile.samples[t] = flat.evaluate(init, success, row, bucket);
    }
  });
  profile.truncated = total(truncated);
  profile.summary = summarize(profile.samples);
  if (curves) {
    profile.unit = flat.unit;
    attach_curves(profile, curves_from_matrix(flat.grid, matrix, opt.trials));
  }
  return profile;
}

}  // namespace

// ---------------------------------------------------------------- streams

double trial_uniform(const RandomStream& stream, std::size_t trial) {
  return stream.derive(trial / kChunkSize).uniform(trial % kChunkSize);
}

RandomStream variable_stream(const RandomStream& stream, std::string_view variable) {
  return stream.derive(fnv1a(variable));
}

// ---------------------------------------------------------------- sampling

Samples sample(const UncertainQuantity& q, const RandomStream& stream, std::size_t n, bool probability) {
  require_trials(n);
  Variable v = make_variable("sample", q, probability, stream);
  v.stream = stream;
  Samples out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = v.inverse(q.is_point() ? 0.5 : trial_uniform(stream, i));
    if (probability && (x < 0.0 || x > 1.0)) {
      x = std::clamp(x, 0.0, 1.0);
      ++out.truncated;
    }
    out.values[i] = x;
  }
  return out;
}

// ---------------------------------------------------------------- copulas

std::vector<std::vector<double>> cholesky(const CorrelationSpec& spec) {
  const std::size_t k = spec.variables.size();
  if (spec.matrix.size() != k) throw DomainError("correlation matrix size does not match its variables");
  for (std::size_t i = 0; i < k; ++i) {
    if (spec.matrix[i].size() != k) throw DomainError("correlation matrix is not square");
    for (std::size_t j = 0; j < k; ++j) {
      const double r = spec.matrix[i][j];
      if (!std::isfinite(r) || r < -1.0 || r > 1.0) throw DomainError("correlation outside [-1,1]");
      if (std::abs(r - spec.matrix[j][i]) > 1e-12) throw DomainError("correlation matrix is not symmetric");
    }
    if (spec.matrix[i][i] != 1.0) throw DomainError("correlation matrix diagonal must be 1");
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (spec.variables[i] == spec.variables[j]) throw DomainError("correlation variable listed twice: " + spec.variables[i]);
    }
  }

  const auto attempt = [&](double jitter) -> std::optional<std::vector<std::vector<double>>> {
    constexpr double tol = 1e-12;
    std::vector<std::vector<double>> l(k, std::vector<double>(k, 0.0));
    for (std::size_t j = 0; j < k; ++j) {
      double d = spec.matrix[j][j] + jitter;
      for (std::size_t m = 0; m < j; ++m) d -= l[j][m] * l[j][m];
      if (d < -tol) return std::nullopt;
      if (d <= tol) {
        // Zero pivot: the remaining column must vanish too.
        for (std::size_t i = j + 1; i < k; ++i) {
          double r = spec.matrix[i][j];
          for (std::size_t m = 0; m < j; ++m) r -= l[i][m] * l[j][m];
          if (std::abs(r) > 1e-9) return std::nullopt;
        }
        continue;
      }
      l[j][j] = std::sqrt(d);
      for (std::size_t i = j + 1; i < k; ++i) {
        double r = spec.matrix[i][j];
        for (std::size_t m = 0; m < j; ++m) r -= l[i][m] * l[j][m];
        l[i][j] = r / l[j][j];
      }
    }
    return l;
  };
  if (auto l = attempt(0.0)) return *l;
  if (auto l = attempt(1e-8)) return *l;
  throw DomainError("correlation matrix is not positive semi-definite");
}

const std::vector<double>& JointSample::column(std::string_view id) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i] == id) return values[i];
  }
  throw ReferenceError("no sampled variable " + std::string(id));
}

const std::vector<double>& JointSample::uniform_column(std::string_view id) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i] == id) return uniforms[i];
  }
  throw ReferenceError("no sampled variable " + std::string(id));
}

JointSample copula_sample(const CorrelationSpec& spec, const std::map<std::string, UncertainQuantity>& marginals,
                          const RandomStream& stream, std::size_t n, const std::set<std::string>& probability_ids) {
  require_trials(n);
  for (const auto& id : spec.variables) {
    if (!marginals.count(id)) throw ReferenceError("no marginal for correlated variable " + id);
  }
  const auto chol = cholesky(spec);
  JointSample out;
  std::vector<Variable> vars;
  for (const auto& [id, q] : marginals) {
    out.variables.push_back(id);
    vars.push_back(make_variable(id, q, probability_ids.count(id) > 0, stream));
  }
  std::vector<std::size_t> corr;
  for (const auto& id : spec.variables) corr.push_back(index_of(vars, id));

  const std::size_t k = vars.size();
  out.uniforms.assign(k, std::vector<double>(n));
  out.values.assign(k, std::vector<double>(n));
  std::vector<std::size_t> truncated(chunk_count(n), 0);
  for_chunks(n, 1, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    std::vector<double> z(corr.size());
    for (std::size_t t = begin; t < end; ++t) {
      for (std::size_t i = 0; i < k; ++i) out.uniforms[i][t] = trial_uniform(vars[i].stream, t);
      for (std::size_t a = 0; a < corr.size(); ++a) z[a] = normal_quantile(out.uniforms[corr[a]][t]);
      for (std::size_t a = 0; a < corr.size(); ++a) {
        double x = 0.0;
        for (std::size_t b = 0; b <= a; ++b) x += chol[a][b] * z[b];
        out.uniforms[corr[a]][t] = std::clamp(normal_cdf(x), kUniformMin, kUniformMax);
      }
      for (std::size_t i = 0; i < k; ++i) {
        double x = vars[i].inverse(out.uniforms[i][t]);
        if (vars[i].probability && (x < 0.0 || x > 1.0)) {
          x = std::clamp(x, 0.0, 1.0);
          ++truncated[chunk];
        }
        out.values[i][t] = x;
      }
    }
  });
  out.truncated = total(truncated);
  return out;
}

// ---------------------------------------------------------------- curves

RiskCurve::RiskCurve(std::vector<CurvePoint> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.severity)) throw DomainError("curve severity must be finite");
    if (!(p.exceedance >= 0.0 && p.exceedance <= 1.0)) throw DomainError("curve exceedance outside [0,1]");
    if (i > 0) {
      if (!(p.severity > points_[i - 1].severity)) throw DomainError("curve severities must strictly increase");
      if (p.exceedance > points_[i - 1].exceedance) throw DomainError("curve exceedance must not increase");
    }
  }
}

double RiskCurve::at(double severity) const {
  if (points_.empty()) return 0.0;
  auto it = std::upper_bound(points_.begin(), points_.end(), severity,
                             [](double s, const CurvePoint& p) { return s < p.severity; });
  if (it == points_.begin()) return points_.front().exceedance;
  return std::prev(it)->exceedance;
}

RiskCurve exceedance_curve(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("exceedance curve needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::vector<CurvePoint> pts;
  for (std::size_t i = 0; i < sorted.size();) {
    const double v = sorted[i];
    pts.push_back(CurvePoint{v, static_cast<double>(sorted.size() - i) / n});
    while (i < sorted.size() && sorted[i] == v) ++i;
  }
  return RiskCurve(std::move(pts));
}

RiskCurve exceedance_curve(std::span<const WeightedSeverity> outcomes) {
  if (outcomes.empty()) throw DomainError("exceedance curve needs at least one outcome");
  std::vector<WeightedSeverity> sorted(outcomes.begin(), outcomes.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.severity < b.severity; });
  double mass = 0.0;
  for (const auto& o : sorted) {
    if (!(o.probability >= 0.0)) throw DomainError("outcome probability must be non-negative");
    mass += o.probability;
  }
  if (mass > 1.0 + 1e-12) throw DomainError("outcome probabilities sum above 1");
  std::vector<CurvePoint> pts;
  // Accumulate from the top so each tail sum is formed the same way.
  double run = 0.0;
  for (std::size_t i = sorted.size(); i-- > 0;) {
    run += sorted[i].probability;
    if (i == 0 || sorted[i - 1].severity != sorted[i].severity) {
      pts.push_back(CurvePoint{sorted[i].severity, std::min(run, 1.0)});
    }
  }
  std::reverse(pts.begin(), pts.end());
  return RiskCurve(std::move(pts));
}

RiskCurveFamily curve_family(std::vector<LabeledCurve> members, std::vector<double> weights) {
  if (members.empty()) throw DomainError("curve family needs at least one member");
  if (weights.size() != members.size()) throw DomainError("one pooling weight per member curve is required");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("pooling weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("pooling weights must sum to 1");

  std::vector<double> grid;
  for (const auto& m : members) {
    for (const auto& p : m.curve.points()) grid.push_back(p.severity);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<CurvePoint> pooled, lower, upper;
  for (double s : grid) {
    double lo = 1.0, hi = 0.0, mix = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const double v = members[i].curve.at(s);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      mix += weights[i] * v;
    }
    pooled.push_back(CurvePoint{s, std::clamp(mix, lo, hi)});
    lower.push_back(CurvePoint{s, lo});
    upper.push_back(CurvePoint{s, hi});
  }
  // A weighted mean of non-increasing step functions is non-increasing up to
  // rounding; pin it with a running minimum.
  for (std::size_t i = 1; i < pooled.size(); ++i) {
    pooled[i].exceedance = std::max(lower[i].exceedance, std::min(pooled[i].exceedance, pooled[i - 1].exceedance));
  }
  return RiskCurveFamily{std::move(members), std::move(weights), RiskCurve(std::move(pooled)),
                         RiskCurve(std::move(lower)), RiskCurve(std::move(upper))};
}

// ---------------------------------------------------------------- loss metrics

double empirical_quantile(std::span<const double> samples, double q) {
  if (samples.empty()) throw DomainError("quantile of an empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in (0,1]");
  std::vector<double> sorted(samples.begin(), samples.end());
  if (!std::is_sorted(sorted.begin(), sorted.end())) std::sort(sorted.begin(), sorted.end());
  const double need = q * static_cast<double>(sorted.size());
  // Smallest k with k >= q n.
  auto k = static_cast<std::size_t>(std::ceil(need));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

LossMetrics var_cvar(std::span<const double> losses, double alpha) {
  if (losses.empty()) throw DomainError("VaR/CVaR need at least one loss sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("confidence level must lie in (0,1)");
  std::vector<double> sorted(losses.begin(), losses.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const double alpha_n = alpha * n;

  // VaR: smallest sample x with #{X <= x} >= alpha n.
  std::size_t i = 0;
  double var = sorted.back();
  while (i < sorted.size()) {
    const double x = sorted[i];
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == x) ++j;
    if (static_cast<double>(j) >= alpha_n) {
      var = x;
      break;
    }
    i = j;
  }
  const auto at_or_below = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), var) - sorted.begin());
  double above = 0.0;
  for (auto it = std::upper_bound(sorted.begin(), sorted.end(), var); it != sorted.end(); ++it) above += *it;
  // Scaled by n: (F(VaR) - alpha) n VaR + sum above, over (1 - alpha) n.
  const double atom = std::max(0.0, at_or_below - alpha_n);
  double cvar = (atom * var + above) / (n - alpha_n);
  cvar = std::max(cvar, var);
  return LossMetrics{var, cvar, alpha};
}

// ---------------------------------------------------------------- Markov stages

ProbabilityValue markov_pipeline(std::span<const double> stage_success) {
  double p = 1.0;
  for (double s : stage_success) p *= ProbabilityValue(s).value();
  return ProbabilityValue(p);
}

std::vector<double> markov_chain(std::span<const Matrix> transitions, std::span<const double> initial) {
  double mass = 0.0;
  for (double v : initial) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("initial distribution entry outside [0,1]");
    mass += v;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw DomainError("initial distribution must sum to 1");
  std::vector<double> dist(initial.begin(), initial.end());
  const std::size_t k = dist.size();
  for (std::size_t step = 0; step < transitions.size(); ++step) {
    const Matrix& m = transitions[step];
    if (m.size() != k) throw DomainError("transition matrix " + std::to_string(step) + " has the wrong size");
    for (const auto& row : m) {
      if (row.size() != k) throw DomainError("transition matrix " + std::to_string(step) + " is not square");
      double s = 0.0;
      for (double v : row) {
        if (!(v >= 0.0)) throw DomainError("transition matrix " + std::to_string(step) + " has a negative entry");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9) {
        throw DomainError("transition matrix " + std::to_string(step) + " is not row-stochastic");
      }
    }
    std::vector<double> next(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) next[j] += dist[i] * m[i][j];
    }
    dist = std::move(next);
  }
  return dist;
}

ProbabilityValue markov_pipeline(std::span<const Matrix> transitions, std::span<const double> initial,
                                 std::size_t success_state) {
  if (success_state >= initial.size()) throw DomainError("success state index out of range");
  auto dist = markov_chain(transitions, initial);
  return ProbabilityValue(std::clamp(dist[success_state], 0.0, 1.0));
}

// ---------------------------------------------------------------- propagation

Summary summarize(std::span<const double> samples) {
  Summary s;
  s.n = samples.size();
  if (samples.empty()) return s;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i];
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  s.mean = mean;
  s.std_error = samples.size() > 1 ? std::sqrt(m2 / static_cast<double>(samples.size() - 1)) /
                                         std::sqrt(static_cast<double>(samples.size()))
                                   : 0.0;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  s.p05 = empirical_quantile(sorted, 0.05);
  s.p50 = empirical_quantile(sorted, 0.50);
  s.p95 = empirical_quantile(sorted, 0.95);
  return s;
}

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::FaultTree: return "ftree";
    case ElementKind::EventTree: return "etree";
    case ElementKind::BowTie: return "bowtie";
    case ElementKind::LikelihoodChain: return "chain";
    case ElementKind::Loss: return "loss";
  }
  return "ftree";
}

RiskProfile propagate_fault_tree(const FaultTree& tree, const PropagateOptions& opt) {
  require_trials(opt.trials);
  const RandomStream base(opt.seed);
  fta::Analyzer analyzer(tree, opt.limits);
  std::vector<Variable> vars;
  for (const auto& id : analyzer.events()) {
    const BasicEvent& e = tree.events[*tree.find_event(id)];
    if (!e.quantity) throw ReferenceError("basic event " + id + " has no probability");
    add_variable(vars, id, *e.quantity, true, base);
  }
  const bool exact = eta::compose_mode(analyzer.event_count(), opt.limits) == eta::ComposeMode::Exact;
  const std::vector<std::uint64_t> masks = exact ? std::vector<std::uint64_t>{} : analyzer.cut_set_masks();
  TrialSampler sampler(std::move(vars), opt.correlations);

  RiskProfile profile;
  profile.target = tree.id;
  profile.kind = ElementKind::FaultTree;
  profile.seed = opt.seed;
  profile.mode = exact ? "exact" : "rare-event";
  profile.samples.resize(opt.trials);
  std::vector<std::size_t> truncated(chunk_count(opt.trials), 0);
  for_chunks(opt.trials, opt.threads, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    std::vector<double> x(analyzer.event_count()), scratch;
    for (std::size_t t = begin; t < end; ++t) {
      truncated[chunk] += sampler.draw(t, x, scratch);
      profile.samples[t] = exact ? analyzer.exact(x) : fta::Analyzer::rare(masks, x);
    }
  });
  profile.truncated = total(truncated);
  profile.summary = summarize(profile.samples);
  return profile;
}

RiskProfile propagate_event_tree(const EventTree& tree, const PropagateOptions& opt) {
  return run_event_tree(tree.id, ElementKind::EventTree, tree, nullptr, opt);
}

RiskProfile propagate_bowtie(const BowTie& bowtie, const ScenarioModel& model, const PropagateOptions& opt) {
  const FaultTree* ft = model.find_fault_tree(bowtie.fault_tree);
  if (!ft) throw ReferenceError("bow-tie " + bowtie.id + ": unresolved reference " + bowtie.fault_tree);
  const EventTree* et = model.find_event_tree(bowtie.event_tree);
  if (!et) throw ReferenceError("bow-tie " + bowtie.id + ": unresolved reference " + bowtie.event_tree);
  return run_event_tree(bowtie.id, ElementKind::BowTie, *et, ft, opt);
}

RiskProfile propagate_chain(const LikelihoodChainSpec& chain, const PropagateOptions& opt) {
  require_trials(opt.trials);
  const RandomStream base(opt.seed);
  std::vector<Variable> vars;
  vars.push_back(make_variable("capability", chain.capability, true, base));
  vars.push_back(make_variable("misuse", chain.misuse, true, base));
  vars.push_back(make_variable("harm", chain.harm, true, base));
  TrialSampler sampler(std::move(vars), opt.correlations);

  RiskProfile profile;
  profile.target = chain.id;
  profile.kind = ElementKind::LikelihoodChain;
  profile.seed = opt.seed;
  profile.samples.resize(opt.trials);
  std::vector<std::size_t> truncated(chunk_count(opt.trials), 0);
  for_chunks(opt.trials, opt.threads, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    std::vector<double> x(3), scratch;
    for (std::size_t t = begin; t < end; ++t) {
      truncated[chunk] += sampler.draw(t, x, scratch);
      profile.samples[t] = x[0] * x[1] * x[2];
    }
  });
  profile.truncated = total(truncated);
  profile.summary = summarize(profile.samples);
  return profile;
}

RiskProfile aggregate_loss(const UncertainQuantity& frequency, const UncertainQuantity& severity,
                           const RandomStream& stream, std::size_t n, unsigned threads) {
  require_trials(n);
  const auto is_count = [](double v) { return v >= 0.0 && std::floor(v) == v; };
  switch (frequency.kind()) {
    case QuantityKind::Poisson: break;
    case QuantityKind::Point:
    case QuantityKind::Empirical:
      if (!std::all_of(frequency.params().begin(), frequency.params().end(), is_count)) {
        throw DomainError("event-count quantity must yield non-negative integers");
      }
      break;
    default: throw DomainError("event-count quantity must be a Poisson rate or an integer count");
  }
  const Variable count = make_variable("count", frequency, false, stream);
  const Variable sev = make_variable("severity", severity, false, stream);
  if (sev.quantity.support().first < 0.0) throw DomainError("per-event severity must be non-negative");

  RiskProfile profile;
  profile.kind = ElementKind::Loss;
  profile.seed = stream.seed();
  profile.samples.resize(n);
  for_chunks(n, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t t = begin; t < end; ++t) {
      const double k = count.quantity.is_point() ? count.quantity.params()[0] : count.inverse(trial_uniform(count.stream, t));
      const RandomStream events = sev.stream.derive(t);
      double loss = 0.0;
      const auto events_n = static_cast<std::uint64_t>(k);
      for (std::uint64_t j = 0; j < events_n; ++j) {
        loss += sev.quantity.is_point() ? sev.quantity.params()[0] : sev.inverse(events.uniform(j));
      }
      profile.samples[t] = loss;
    }
  });
  profile.summary = summarize(profile.samples);
  profile.mean_curve = exceedance_curve(profile.samples);
  return profile;
}

RiskProfile propagate_loss(const LossModel& loss, const PropagateOptions& opt) {
  RiskProfile p = aggregate_loss(loss.count, loss.severity, RandomStream(opt.seed), opt.trials, opt.threads);
  p.target = loss.id;
  p.unit = loss.unit;
  return p;
}

RiskProfile propagate(const ScenarioModel& model, std::string_view target, const PropagateOptions& opt) {
  if (const auto* ft = model.find_fault_tree(target)) return propagate_fault_tree(*ft, opt);
  if (const auto* et = model.find_event_tree(target)) return propagate_event_tree(*et, opt);
  if (const auto* bt = model.find_bowtie(target)) return propagate_bowtie(*bt, model, opt);
  if (const auto* ch = model.find_chain(target)) return propagate_chain(*ch, opt);
  if (const auto* ls = model.find_loss(target)) return propagate_loss(*ls, opt);
  throw ReferenceError("no quantifiable element named " + std::string(target));
}

}  // namespace riskforge::quant
