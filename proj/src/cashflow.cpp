#include "fragilis/cashflow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fragilis/error.hpp"

namespace fragilis::cashflow {

namespace {

constexpr double kIrrLow = -0.99;
constexpr double kIrrHigh = 10.0;
constexpr int kIrrScanPoints = 4000;

void check_rate(double rate) {
  if (!std::isfinite(rate) || rate <= -1.0)
    throw DomainError("discount rate must be finite and > -1");
}

void append_discounted(const CashFlowStream& stream, double rate, std::vector<double>& out) {
  for (const auto& cf : stream.entries()) out.push_back(cf.amount * discount_factor(rate, cf.t));
}

// Sorted descending, the order every total in this module is accumulated in.
double sum_desc(std::vector<double>& values) {
  std::sort(values.begin(), values.end(), std::greater<>());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

std::vector<double> cumulative(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  double run = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    run += values[i];
    out[i] = run;
  }
  return out;
}

double stream_npv(const CashFlowStream& stream, double rate) {
  double total = 0.0;
  for (const auto& cf : stream.entries()) total += cf.amount * std::pow(1.0 + rate, -cf.t);
  return total;
}

void check_nonnegative(const CashFlowStream& s, const char* name) {
  for (const auto& cf : s.entries())
    if (cf.amount < 0.0)
      throw DomainError(std::string(name) + " amounts must be >= 0");
}

}  // namespace

CashFlowStream::CashFlowStream(std::vector<CashFlow> entries) : entries_(std::move(entries)) {
  for (const auto& cf : entries_) {
    if (!std::isfinite(cf.t) || cf.t < 0.0)
      throw DomainError("cash flow times must be finite and >= 0");
    if (!std::isfinite(cf.amount)) throw DomainError("cash flow amounts must be finite");
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const CashFlow& a, const CashFlow& b) { return a.t < b.t; });
}

CashFlowStream CashFlowStream::transformed(double scale, double dt) const {
  std::vector<CashFlow> out(entries_.begin(), entries_.end());
  for (auto& cf : out) {
    cf.t += dt;
    cf.amount *= scale;
  }
  return CashFlowStream(std::move(out));
}

AppraisalModel::AppraisalModel(CashFlowStream capex, CashFlowStream om, CashFlowStream benefits,
                               double discount_rate, int base_year)
    : capex_(std::move(capex)),
      om_(std::move(om)),
      benefits_(std::move(benefits)),
      rate_(discount_rate),
      base_year_(base_year) {
  check_rate(rate_);
  check_nonnegative(capex_, "capex");
  check_nonnegative(om_, "om");
  check_nonnegative(benefits_, "benefits");
}

CashFlowStream AppraisalModel::net_stream() const {
  std::vector<CashFlow> merged;
  for (const auto& cf : benefits_.entries()) merged.push_back(cf);
  for (const auto& cf : capex_.entries()) merged.push_back({cf.t, -cf.amount});
  for (const auto& cf : om_.entries()) merged.push_back({cf.t, -cf.amount});
  std::stable_sort(merged.begin(), merged.end(),
                   [](const CashFlow& a, const CashFlow& b) { return a.t < b.t; });
  std::vector<CashFlow> out;
  for (const auto& cf : merged) {
    if (!out.empty() && out.back().t == cf.t)
      out.back().amount += cf.amount;
    else
      out.push_back(cf);
  }
  return CashFlowStream(std::move(out));
}

double discount_factor(double rate, double t) {
  check_rate(rate);
  if (!(t >= 0.0)) throw DomainError("discount time must be >= 0");
  return std::pow(1.0 + rate, -t);
}

double present_value(const CashFlowStream& stream, double rate) {
  std::vector<double> values;
  append_discounted(stream, rate, values);
  return sum_desc(values);
}

double pv_gain(const AppraisalModel& model) {
  return present_value(model.benefits(), model.discount_rate());
}

double pv_pain(const AppraisalModel& model) {
  std::vector<double> values;
  append_discounted(model.capex(), model.discount_rate(), values);
  append_discounted(model.om(), model.discount_rate(), values);
  return sum_desc(values);
}

double npv(const AppraisalModel& model) { return pv_gain(model) - pv_pain(model); }

double bcr(const AppraisalModel& model) {
  const double pain = pv_pain(model);
  if (!(pain > 0.0)) throw DomainError("benefit-cost ratio undefined: present value of costs is 0");
  return pv_gain(model) / pain;
}

std::optional<double> irr(const CashFlowStream& stream) {
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& cf : stream.entries()) {
    has_pos = has_pos || cf.amount > 0.0;
    has_neg = has_neg || cf.amount < 0.0;
  }
  if (!has_pos || !has_neg) throw DomainError("irr needs a stream with both signs");

  // Scan uniformly in log(1 + r) so the grid is dense near -1, where NPV
  // changes fastest, then bisect the first bracketing cell.
  const double lo_log = std::log1p(kIrrLow);
  const double hi_log = std::log1p(kIrrHigh);
  double prev_r = kIrrLow;
  double prev_v = stream_npv(stream, prev_r);
  if (prev_v == 0.0) return prev_r;
  for (int i = 1; i <= kIrrScanPoints; ++i) {
    const double r = i == kIrrScanPoints
                         ? kIrrHigh
                         : std::expm1(lo_log + (hi_log - lo_log) * i / kIrrScanPoints);
    const double v = stream_npv(stream, r);
    if (v == 0.0) return r;
    if ((v < 0.0) != (prev_v < 0.0)) {
      double a = prev_r;
      double b = r;
      const bool a_negative = prev_v < 0.0;
      for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = stream_npv(stream, mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == a_negative)
          a = mid;
        else
          b = mid;
      }
      return 0.5 * (a + b);
    }
    prev_r = r;
    prev_v = v;
  }
  return std::nullopt;
}

PayoffCurve payoff_curve(const AppraisalModel& model) {
  PayoffCurve curve;
  const double r = model.discount_rate();
  append_discounted(model.benefits(), r, curve.gains_desc);
  append_discounted(model.capex(), r, curve.pains_desc);
  append_discounted(model.om(), r, curve.pains_desc);
  std::sort(curve.gains_desc.begin(), curve.gains_desc.end(), std::greater<>());
  std::sort(curve.pains_desc.begin(), curve.pains_desc.end(), std::greater<>());
  curve.cum_gain = cumulative(curve.gains_desc);
  curve.cum_pain = cumulative(curve.pains_desc);

  const std::size_t len = std::max(curve.cum_gain.size(), curve.cum_pain.size());
  auto at = [](const std::vector<double>& cum, std::size_t i) {
    if (cum.empty()) return 0.0;
    return i < cum.size() ? cum[i] : cum.back();
  };
  // Walk backwards while pain still dominates; the last such run start is
  // the crossover point.
  std::optional<std::size_t> index;
  for (std::size_t i = len; i-- > 0;) {
    if (at(curve.cum_pain, i) > at(curve.cum_gain, i))
      index = i;
    else
      break;
  }
  curve.fragility_index = index;
  return curve;
}

BreakEvenOverrun break_even_overrun(const AppraisalModel& model, double shortfall) {
  if (!(shortfall >= 0.0 && shortfall < 1.0)) throw DomainError("shortfall must lie in [0, 1)");
  const double r = model.discount_rate();
  const double pv_capex = present_value(model.capex(), r);
  if (!(pv_capex > 0.0)) throw DomainError("break-even overrun needs capex with positive present value");
  const double pv_om = present_value(model.om(), r);
  const double k = (pv_gain(model) * (1.0 - shortfall) - pv_om) / pv_capex;
  if (k < 0.0) return {0.0, true};
  return {k, false};
}

AppraisalModel apply_stress(const AppraisalModel& model, double cost_mult, double benefit_mult,
                            double delay_years) {
  if (!(cost_mult >= 0.0) || !(benefit_mult >= 0.0) || !(delay_years >= 0.0))
    throw DomainError("stress multipliers and delay must be >= 0");
  return AppraisalModel(model.capex().transformed(cost_mult, 0.0),
                        model.om().transformed(1.0, delay_years),
                        model.benefits().transformed(benefit_mult, delay_years),
                        model.discount_rate(), model.base_year());
}

BreakEvenDelay break_even_delay(const AppraisalModel& model) {
  const double base = bcr(model);
  if (base <= 1.0) return {0.0, true};
  if (model.discount_rate() <= 0.0) return {std::nullopt, false};
  if (!(present_value(model.capex(), model.discount_rate()) > 0.0)) return {std::nullopt, false};

  auto delayed_bcr = [&](double d) { return bcr(apply_stress(model, 1.0, 1.0, d)); };
  double lo = 0.0;
  double hi = 1.0;
  while (delayed_bcr(hi) > 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return {std::nullopt, false};
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (delayed_bcr(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), false};
}

AppraisalResult appraise(const AppraisalModel& model, double shortfall) {
  AppraisalResult result;
  const double gain = pv_gain(model);
  const double pain = pv_pain(model);
  result.npv = gain - pain;
  result.bcr = bcr(model);
  const auto net = model.net_stream();
  bool pos = false;
  bool neg = false;
  for (const auto& cf : net.entries()) {
    pos = pos || cf.amount > 0.0;
    neg = neg || cf.amount < 0.0;
  }
  if (pos && neg) result.irr = irr(net);
  if (present_value(model.capex(), model.discount_rate()) > 0.0)
    result.break_even_overrun = break_even_overrun(model, shortfall);
  result.break_even_delay = break_even_delay(model);
  return result;
}

}  // namespace fragilis::cashflow
