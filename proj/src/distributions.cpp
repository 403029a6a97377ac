#include "riskforge/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "riskforge/core.hpp"

namespace riskforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_valid(const UncertainQuantity& q) {
  auto issues = q.problems();
  if (!issues.empty()) {
    throw DomainError("invalid " + std::string(to_string(q.kind())) + " quantity: " + issues.front());
  }
}

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  return v;
}

double poisson_quantile(double lambda, double u) {
  if (lambda == 0.0) return 0.0;
  if (lambda > 500.0) {
    using namespace boost::math::policies;
    using Policy = policy<discrete_quantile<integer_round_up>>;
    return boost::math::quantile(boost::math::poisson_distribution<double, Policy>(lambda), u);
  }
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  double k = 0.0;
  while (cdf < u) {
    k += 1.0;
    pmf *= lambda / k;
    cdf += pmf;
    // Accumulated rounding can leave cdf a hair below u deep in the tail.
    if (pmf == 0.0 && k > lambda) break;
  }
  return k;
}

}  // namespace

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("normal quantile needs u in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), u);
}

std::pair<double, double> UncertainQuantity::support() const {
  require_valid(*this);
  const auto& p = params_;
  switch (kind_) {
    case QuantityKind::Point: return {p[0], p[0]};
    case QuantityKind::Interval: return {p[0], p[1]};
    case QuantityKind::Beta: return {0.0, 1.0};
    case QuantityKind::Lognormal: return {0.0, kInf};
    case QuantityKind::Triangular: return {p[0], p[2]};
    case QuantityKind::Empirical: {
      auto [lo, hi] = std::minmax_element(p.begin(), p.end());
      return {*lo, *hi};
    }
    case QuantityKind::Poisson: return {0.0, p[0] == 0.0 ? 0.0 : kInf};
    case QuantityKind::Mixture: {
      double lo = kInf;
      double hi = -kInf;
      for (const auto& c : components_) {
        auto [clo, chi] = c.support();
        lo = std::min(lo, clo);
        hi = std::max(hi, chi);
      }
      return {lo, hi};
    }
  }
  return {0.0, 0.0};
}

double UncertainQuantity::mean() const {
  require_valid(*this);
  const auto& p = params_;
  switch (kind_) {
    case QuantityKind::Point: return p[0];
    case QuantityKind::Interval: return 0.5 * (p[0] + p[1]);
    case QuantityKind::Beta: return p[0] / (p[0] + p[1]);
    case QuantityKind::Lognormal: return std::exp(p[0] + 0.5 * p[1] * p[1]);
    case QuantityKind::Triangular: return (p[0] + p[1] + p[2]) / 3.0;
    case QuantityKind::Empirical: {
      double sum = 0.0;
      for (double x : p) sum += x;
      return sum / static_cast<double>(p.size());
    }
    case QuantityKind::Poisson: return p[0];
    case QuantityKind::Mixture: {
      double m = 0.0;
      for (std::size_t i = 0; i < components_.size(); ++i) m += p[i] * components_[i].mean();
      return m;
    }
  }
  return 0.0;
}

double UncertainQuantity::cdf(double x) const {
  require_valid(*this);
  const auto& p = params_;
  switch (kind_) {
    case QuantityKind::Point: return x >= p[0] ? 1.0 : 0.0;
    case QuantityKind::Interval:
      if (x < p[0]) return 0.0;
      if (x >= p[1]) return 1.0;
      return (x - p[0]) / (p[1] - p[0]);
    case QuantityKind::Beta:
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return boost::math::ibeta(p[0], p[1], x);
    case QuantityKind::Lognormal:
      if (x <= 0.0) return 0.0;
      return normal_cdf((std::log(x) - p[0]) / p[1]);
    case QuantityKind::Triangular: {
      const double a = p[0], m = p[1], b = p[2];
      if (x < a) return 0.0;
      if (x >= b) return 1.0;
      if (x <= m) return (x - a) * (x - a) / ((b - a) * (m - a));
      return 1.0 - (b - x) * (b - x) / ((b - a) * (b - m));
    }
    case QuantityKind::Empirical: {
      auto n = std::count_if(p.begin(), p.end(), [x](double v) { return v <= x; });
      return static_cast<double>(n) / static_cast<double>(p.size());
    }
    case QuantityKind::Poisson:
      if (x < 0.0) return 0.0;
      if (p[0] == 0.0) return 1.0;
      return boost::math::gamma_q(std::floor(x) + 1.0, p[0]);
    case QuantityKind::Mixture: {
      double f = 0.0;
      for (std::size_t i = 0; i < components_.size(); ++i) f += p[i] * components_[i].cdf(x);
      return std::min(1.0, f);
    }
  }
  return 0.0;
}

double UncertainQuantity::quantile(double u) const {
  require_valid(*this);
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  const auto& p = params_;
  switch (kind_) {
    case QuantityKind::Point: return p[0];
    case QuantityKind::Interval: return p[0] + u * (p[1] - p[0]);
    case QuantityKind::Beta: return boost::math::ibeta_inv(p[0], p[1], u);
    case QuantityKind::Lognormal: return std::exp(p[0] + p[1] * normal_quantile(u));
    case QuantityKind::Triangular: {
      const double a = p[0], m = p[1], b = p[2];
      if (a == b) return a;
      const double fm = (m - a) / (b - a);
      if (u <= fm) return a + std::sqrt(u * (b - a) * (m - a));
      return b - std::sqrt((1.0 - u) * (b - a) * (b - m));
    }
    case QuantityKind::Empirical: {
      auto sorted = sorted_copy(p);
      const auto n = static_cast<double>(sorted.size());
      auto k = static_cast<std::size_t>(std::ceil(u * n));
      k = std::clamp<std::size_t>(k, 1, sorted.size());
      return sorted[k - 1];
    }
    case QuantityKind::Poisson: return poisson_quantile(p[0], u);
    case QuantityKind::Mixture: {
      // The mixture quantile is bracketed by the component quantiles.
      double lo = kInf;
      double hi = -kInf;
      for (const auto& c : components_) {
        const double q = c.quantile(u);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
      }
      if (cdf(lo) >= u) return lo;
      for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++iter) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (cdf(mid) >= u) hi = mid;
        else lo = mid;
      }
      return hi;
    }
  }
  return 0.0;
}

}  // namespace riskforge
