#include "fragilis/stress.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "fragilis/error.hpp"
#include "fragilis/numeric.hpp"
#include "fragilis/rng.hpp"

namespace fragilis::stress {

namespace {

constexpr double kSmallShape = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double log_slope(const QuantileAnchor& a, const QuantileAnchor& b) {
  return std::log(b.x / a.x) / (b.p - a.p);
}

}  // namespace

QuantileDistribution QuantileDistribution::build(std::vector<QuantileAnchor> anchors,
                                                 double floor_x, const TailSpec& tail) {
  if (anchors.empty()) throw DomainError("quantile distribution needs at least one anchor");
  if (!(floor_x > 0.0) || !std::isfinite(floor_x)) throw DomainError("floor_x must be finite and > 0");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto& a = anchors[i];
    if (!(a.p > 0.0 && a.p < 1.0)) throw DomainError("anchor probabilities must lie in (0, 1)");
    if (!std::isfinite(a.x)) throw DomainError("anchor values must be finite");
    if (i > 0 && !(a.p > anchors[i - 1].p && a.x > anchors[i - 1].x))
      throw DomainError("anchors must be strictly increasing in both p and x");
  }
  if (!(floor_x < anchors.front().x)) throw DomainError("floor_x must lie below the first anchor");

  QuantileDistribution d;
  d.anchors_ = std::move(anchors);
  d.floor_x_ = floor_x;
  d.knots_.push_back({0.0, floor_x});
  d.knots_.insert(d.knots_.end(), d.anchors_.begin(), d.anchors_.end());

  const double sigma = d.junction_scale();
  std::visit(Overloaded{
                 [&](const GpdTail& t) {
                   if (!(t.xi < 1.0) || !std::isfinite(t.xi)) throw DomainError("tail shape must be < 1");
                   if (!(t.sigma > 0.0) || !std::isfinite(t.sigma))
                     throw DomainError("tail scale must be finite and > 0");
                   d.tail_ = t;
                 },
                 [&](const CalibrateMean& c) {
                   if (!std::isfinite(c.target)) throw DomainError("mean target must be finite");
                   d.tail_.sigma = sigma;
                   d.mean_target_ = c.target;
                   const double lo_mean = d.mean_with_shape(0.0);
                   const double hi_mean = d.mean_with_shape(kMaxCalibratedShape);
                   if (!(c.target > lo_mean))
                     throw ComputationError("mean target " + std::to_string(c.target) +
                                            " is not above the light-tail mean " +
                                            std::to_string(lo_mean) + "; calibration infeasible");
                   if (!(c.target < hi_mean))
                     throw ComputationError("mean target " + std::to_string(c.target) +
                                            " needs a tail shape >= " +
                                            std::to_string(kMaxCalibratedShape) +
                                            " (infinite mean); calibration infeasible");
                   // Mean is increasing in the shape; bisect to full precision.
                   double lo = 0.0;
                   double hi = kMaxCalibratedShape;
                   for (int it = 0; it < 200; ++it) {
                     const double mid = 0.5 * (lo + hi);
                     if (mid == lo || mid == hi) break;
                     (d.mean_with_shape(mid) < c.target ? lo : hi) = mid;
                   }
                   const double lo_err = std::abs(d.mean_with_shape(lo) - c.target);
                   const double hi_err = std::abs(d.mean_with_shape(hi) - c.target);
                   d.tail_.xi = lo_err <= hi_err ? lo : hi;
                 },
             },
             tail);
  return d;
}

double QuantileDistribution::junction_scale() const {
  const auto& last = knots_.back();
  const auto& prev = knots_[knots_.size() - 2];
  // dQ/dp just below the junction equals the GPD's sigma / (1 - p_last).
  return (1.0 - last.p) * last.x * log_slope(prev, last);
}

double QuantileDistribution::body_quantile(std::size_t segment, double u) const {
  const auto& a = knots_[segment];
  const auto& b = knots_[segment + 1];
  if (u == a.p) return a.x;
  if (u == b.p) return b.x;
  return a.x * std::exp(log_slope(a, b) * (u - a.p));
}

double QuantileDistribution::tail_excess(double q) const {
  const double xi = tail_.xi;
  if (std::abs(xi) < kSmallShape) return -tail_.sigma * std::log1p(-q);
  return tail_.sigma * std::expm1(-xi * std::log1p(-q)) / xi;
}

// Integral of the tail excess over conditional probability (0, q].
double QuantileDistribution::tail_integral(double q) const {
  const double xi = tail_.xi;
  const double s = tail_.sigma;
  if (q >= 1.0) {
    if (xi >= 1.0) return HUGE_VAL;
    return s / (1.0 - xi);
  }
  if (std::abs(xi) < kSmallShape) return s * ((1.0 - q) * std::log1p(-q) + q);
  // (sigma / xi) [ (1 - (1-q)^(1-xi)) / (1 - xi) - q ]
  const double one_minus = -std::expm1((1.0 - xi) * std::log1p(-q));
  return s / xi * (one_minus / (1.0 - xi) - q);
}

double QuantileDistribution::mean_with_shape(double xi) const {
  QuantileDistribution probe = *this;
  probe.tail_.xi = xi;
  return probe.mean();
}

double QuantileDistribution::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
  const auto& last = knots_.back();
  if (u > last.p) return last.x + tail_excess((u - last.p) / (1.0 - last.p));
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), u,
                                   [](double v, const QuantileAnchor& k) { return v < k.p; });
  const auto segment = static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (segment + 1 >= knots_.size()) return last.x;
  return body_quantile(segment, u);
}

double QuantileDistribution::cdf(double x) const {
  if (std::isnan(x)) throw DomainError("cdf of NaN");
  if (x <= floor_x_) return 0.0;
  const auto& last = knots_.back();
  if (x > last.x) {
    const double z = tail_.xi * (x - last.x) / tail_.sigma;
    double survival = 0.0;
    if (std::abs(tail_.xi) < kSmallShape)
      survival = std::exp(-(x - last.x) / tail_.sigma);
    else if (1.0 + z > 0.0)
      survival = std::exp(-std::log1p(z) / tail_.xi);
    return last.p + (1.0 - last.p) * (1.0 - survival);
  }
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), x,
                                   [](const QuantileAnchor& k, double v) { return k.x < v; });
  if (it->x == x) return it->p;
  const auto& b = *it;
  const auto& a = *(it - 1);
  return a.p + std::log(x / a.x) / log_slope(a, b);
}

double QuantileDistribution::partial_expectation(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("partial expectation needs p in [0, 1]");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    const auto& a = knots_[i];
    const auto& b = knots_[i + 1];
    if (p <= a.p) return total;
    const double upper = std::min(p, b.p);
    // Integral of a.x exp(lambda (u - a.p)) over [a.p, upper].
    total += (body_quantile(i, upper) - a.x) / log_slope(a, b);
  }
  const auto& last = knots_.back();
  if (p <= last.p) return total;
  const double q = (p - last.p) / (1.0 - last.p);
  return total + (1.0 - last.p) * (last.x * q + tail_integral(q));
}

double QuantileDistribution::mean() const { return partial_expectation(1.0); }

double draw(const Uncertain& source, double u) {
  return std::visit(Overloaded{[](const Fixed& f) { return f.value; },
                               [u](const QuantileDistribution& d) { return d.quantile(u); }},
                    source);
}

QuantileDistribution big_dam_cost_distribution() {
  return QuantileDistribution::build(
      {{0.25, 1.00}, {0.50, 1.27}, {0.53, 1.40}, {0.75, 1.86}, {0.80, 1.99}, {0.90, 3.07}},
      kDefaultFloor, CalibrateMean{1.96});
}

QuantileDistribution big_dam_schedule_distribution() {
  return QuantileDistribution::build({{0.20, 1.00}, {0.50, 1.27}}, 0.6, CalibrateMean{1.44});
}

StressEvaluator::StressEvaluator(const cashflow::AppraisalModel& model)
    : rate_(model.discount_rate()),
      pv_capex_(cashflow::present_value(model.capex(), model.discount_rate())),
      pv_om_(cashflow::present_value(model.om(), model.discount_rate())),
      pv_benefits_(cashflow::present_value(model.benefits(), model.discount_rate())) {}

StressEvaluator::Outcome StressEvaluator::evaluate(double cost_mult, double benefit_mult,
                                                   double delay_years) const {
  // A uniform shift by d scales every present value by (1 + r)^-d.
  const double shift = delay_years == 0.0 ? 1.0 : std::pow(1.0 + rate_, -delay_years);
  const double gain = benefit_mult * shift * pv_benefits_;
  const double pain = cost_mult * pv_capex_ + shift * pv_om_;
  if (!(pain > 0.0)) throw DomainError("benefit-cost ratio undefined: present value of costs is 0");
  return {gain - pain, gain / pain};
}

StressResult run_stress(const cashflow::AppraisalModel& model, const StressConfig& config,
                        unsigned threads) {
  if (config.n_trials == 0) throw DomainError("stress test needs at least one trial");
  if (config.schedule && !(config.est_duration_years >= 0.0))
    throw DomainError("estimated duration must be >= 0");
  const StressEvaluator evaluator(model);
  const std::uint64_t n = config.n_trials;

  std::vector<double> npvs(n);
  std::vector<unsigned char> broken(n);
  auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const double k = draw(config.capex, rng::uniform_open(config.seed, i, static_cast<std::uint32_t>(DrawTag::Capex)));
      double delay = 0.0;
      if (config.schedule) {
        const double slip = draw(*config.schedule, rng::uniform_open(config.seed, i, static_cast<std::uint32_t>(DrawTag::Schedule)));
        delay = std::max(0.0, slip - 1.0) * config.est_duration_years;
      }
      const double s = draw(config.shortfall, rng::uniform_open(config.seed, i, static_cast<std::uint32_t>(DrawTag::Shortfall)));
      const auto outcome = evaluator.evaluate(std::max(0.0, k), std::max(0.0, 1.0 - s), delay);
      npvs[i] = outcome.npv;
      broken[i] = outcome.bcr < 1.0 ? 1 : 0;
    }
  };

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n));
  if (workers <= 1) {
    run_range(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = w * chunk;
      const std::uint64_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
  }

  // Aggregation runs in trial order, independent of the worker split.
  StressResult result;
  result.n_trials = n;
  result.seed = config.seed;
  std::uint64_t breaks = 0;
  for (unsigned char b : broken) breaks += b;
  result.p_break = static_cast<double>(breaks) / static_cast<double>(n);
  result.p_break_se = std::sqrt(result.p_break * (1.0 - result.p_break) / static_cast<double>(n));
  result.mean_npv = compensated_sum(npvs) / static_cast<double>(n);
  std::sort(npvs.begin(), npvs.end());
  for (double p : config.npv_probs) result.npv_quantiles[p] = quantile_sorted(npvs, p);
  return result;
}

double p_break_analytic(const QuantileDistribution& dist, double break_even_overrun) {
  if (!(break_even_overrun > 0.0)) throw DomainError("break-even overrun must be > 0");
  return 1.0 - dist.cdf(break_even_overrun);
}

SensitivityGrid sensitivity_grid(const cashflow::AppraisalModel& model,
                                 const std::vector<double>& benefit_mults,
                                 const std::vector<double>& cost_mults) {
  for (const auto* mults : {&benefit_mults, &cost_mults})
    for (double m : *mults)
      if (!(m > 0.0)) throw DomainError("sensitivity multipliers must be > 0");
  SensitivityGrid grid{benefit_mults, cost_mults, {}};
  for (double k : cost_mults) {
    auto& row = grid.cells.emplace_back();
    for (double b : benefit_mults) {
      const auto stressed = cashflow::apply_stress(model, k, b, 0.0);
      GridCell cell;
      cell.bcr = cashflow::bcr(stressed);
      const auto net = stressed.net_stream();
      const bool mixed =
          std::any_of(net.entries().begin(), net.entries().end(), [](const auto& c) { return c.amount > 0.0; }) &&
          std::any_of(net.entries().begin(), net.entries().end(), [](const auto& c) { return c.amount < 0.0; });
      if (mixed) cell.irr = cashflow::irr(net);
      row.push_back(cell);
    }
  }
  return grid;
}

Contingency size_contingency(const cashflow::AppraisalModel& model, const Uncertain& capex,
                             double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw DomainError("coverage must lie in (0, 1)");
  Contingency out;
  out.contingency = draw(capex, coverage) - 1.0;
  out.adjusted_bcr = cashflow::bcr(cashflow::apply_stress(model, 1.0 + out.contingency, 1.0, 0.0));
  out.proceed = out.adjusted_bcr > 1.0;
  return out;
}

}  // namespace fragilis::stress
