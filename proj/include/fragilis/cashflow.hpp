#pragma once

// Deterministic appraisal math: discounting, NPV, BCR, IRR, the sorted
// gain/pain payoff curve and the break-even thresholds for capex overrun
// and schedule delay.
//
// Discounting is discrete annual compounding, (1 + r)^-t, with fractional
// t allowed. Amounts are in constant base-year currency.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fragilis::cashflow {

struct CashFlow {
  double t = 0.0;       // years from the decision date
  double amount = 0.0;  // constant base-year currency

  friend bool operator==(const CashFlow&, const CashFlow&) = default;
};

// A time-ordered list of dated amounts. Construction sorts by time (stable)
// and rejects negative or non-finite times and non-finite amounts.
class CashFlowStream {
 public:
  CashFlowStream() = default;
  explicit CashFlowStream(std::vector<CashFlow> entries);

  std::span<const CashFlow> entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  // Shift every time by dt and multiply every amount by scale.
  CashFlowStream transformed(double scale, double dt) const;

  friend bool operator==(const CashFlowStream&, const CashFlowStream&) = default;

 private:
  std::vector<CashFlow> entries_;
};

// Capex, O&M and benefits of one project plus its real discount rate.
// Capex and O&M are pain, benefits are gain; all amounts must be >= 0.
class AppraisalModel {
 public:
  AppraisalModel(CashFlowStream capex, CashFlowStream om, CashFlowStream benefits,
                 double discount_rate, int base_year = 0);

  const CashFlowStream& capex() const noexcept { return capex_; }
  const CashFlowStream& om() const noexcept { return om_; }
  const CashFlowStream& benefits() const noexcept { return benefits_; }
  double discount_rate() const noexcept { return rate_; }
  int base_year() const noexcept { return base_year_; }

  // Net stream (benefits - capex - O&M), merged by time.
  CashFlowStream net_stream() const;

  friend bool operator==(const AppraisalModel&, const AppraisalModel&) = default;

 private:
  CashFlowStream capex_;
  CashFlowStream om_;
  CashFlowStream benefits_;
  double rate_;
  int base_year_;
};

// Discounted gains and pains, each sorted descending, with running sums.
// fragility_index is the first position from which cumulative pain stays
// strictly above cumulative gain (shorter curve padded with its total);
// it exists iff total pain > total gain.
struct PayoffCurve {
  std::vector<double> gains_desc;
  std::vector<double> pains_desc;
  std::vector<double> cum_gain;
  std::vector<double> cum_pain;
  std::optional<std::size_t> fragility_index;

  double total_gain() const { return cum_gain.empty() ? 0.0 : cum_gain.back(); }
  double total_pain() const { return cum_pain.empty() ? 0.0 : cum_pain.back(); }
};

struct BreakEvenOverrun {
  double multiplier = 0.0;        // k*, clamped at 0
  bool broken_regardless = false;  // shortfall-adjusted benefits below O&M alone
};

struct BreakEvenDelay {
  std::optional<double> years;  // absent: delay never breaks the project
  bool already_broken = false;   // BCR <= 1 at zero delay; years == 0
};

struct AppraisalResult {
  double npv = 0.0;
  double bcr = 0.0;
  std::optional<double> irr;
  BreakEvenOverrun break_even_overrun;
  BreakEvenDelay break_even_delay;
};

double discount_factor(double rate, double t);

// Present value of a stream at the given rate (entries summed largest
// discounted value first).
double present_value(const CashFlowStream& stream, double rate);

double pv_gain(const AppraisalModel& model);
double pv_pain(const AppraisalModel& model);

double npv(const AppraisalModel& model);
double bcr(const AppraisalModel& model);

// Smallest root of NPV(rate) = 0 on (-0.99, 10]; absent when NPV does not
// change sign on the bracket. Streams with several sign changes may have
// several roots.
std::optional<double> irr(const CashFlowStream& stream);

PayoffCurve payoff_curve(const AppraisalModel& model);

// Capex multiplier at which BCR = 1 with O&M fixed and benefits scaled by
// (1 - shortfall).
BreakEvenOverrun break_even_overrun(const AppraisalModel& model, double shortfall = 0.0);

// Capex amounts x cost_mult; benefits x benefit_mult and shifted by delay;
// O&M shifted by delay. Capex timing is left on the original schedule.
AppraisalModel apply_stress(const AppraisalModel& model, double cost_mult,
                            double benefit_mult, double delay_years);

BreakEvenDelay break_even_delay(const AppraisalModel& model);

AppraisalResult appraise(const AppraisalModel& model, double shortfall = 0.0);

}  // namespace fragilis::cashflow
