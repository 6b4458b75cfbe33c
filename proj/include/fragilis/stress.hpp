#pragma once

// Fat-tailed stress testing of an appraisal.
//
// Overrun, slippage and shortfall distributions are given by quantile
// anchors: the inverse CDF is linear in log(x) between (0, floor_x), the
// anchors and the last anchor, and a generalized Pareto tail takes over
// above the last anchor. The tail scale is pinned by continuity of the
// density at the junction; the shape is either explicit or solved so the
// distribution has a target mean.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fragilis/cashflow.hpp"

namespace fragilis::stress {

struct QuantileAnchor {
  double p = 0.0;  // in (0, 1)
  double x = 0.0;

  friend bool operator==(const QuantileAnchor&, const QuantileAnchor&) = default;
};

struct GpdTail {
  double xi = 0.0;     // shape, < 1
  double sigma = 1.0;  // scale, > 0

  friend bool operator==(const GpdTail&, const GpdTail&) = default;
};

struct CalibrateMean {
  double target = 0.0;
};

using TailSpec = std::variant<GpdTail, CalibrateMean>;

class QuantileDistribution {
 public:
  static constexpr double kMaxCalibratedShape = 0.99;

  // Throws DomainError for bad anchors/floor/tail and ComputationError when
  // a mean target cannot be reached with a shape in (0, 0.99).
  static QuantileDistribution build(std::vector<QuantileAnchor> anchors, double floor_x,
                                    const TailSpec& tail);

  // Inverse CDF on (0, 1). Returns anchor x exactly at anchor p.
  double quantile(double u) const;
  double cdf(double x) const;
  // Integral of the quantile function over (0, p]; mean() is p = 1.
  double partial_expectation(double p) const;
  double mean() const;

  const std::vector<QuantileAnchor>& anchors() const noexcept { return anchors_; }
  double floor_x() const noexcept { return floor_x_; }
  const GpdTail& tail() const noexcept { return tail_; }
  const std::optional<double>& mean_target() const noexcept { return mean_target_; }

  // Tail scale implied by density continuity at the last anchor.
  double junction_scale() const;

  friend bool operator==(const QuantileDistribution&, const QuantileDistribution&) = default;

 private:
  QuantileDistribution() = default;

  double body_quantile(std::size_t segment, double u) const;
  double tail_excess(double q) const;
  double tail_integral(double q) const;
  double mean_with_shape(double xi) const;

  std::vector<QuantileAnchor> anchors_;
  std::vector<QuantileAnchor> knots_;  // (0, floor_x) followed by the anchors
  double floor_x_ = 0.0;
  GpdTail tail_;
  std::optional<double> mean_target_;
};

// A stress input: either a point value or a distribution.
struct Fixed {
  double value = 0.0;
};
using Uncertain = std::variant<Fixed, QuantileDistribution>;

double draw(const Uncertain& source, double u);

// The canonical big-dam cost-overrun distribution: anchors at P25 1.00,
// P50 1.27, P53 1.40, P75 1.86, P80 1.99, P90 3.07, floor 0.4 and a tail
// calibrated to a mean of 1.96.
QuantileDistribution big_dam_cost_distribution();
// Schedule slippage: P20 1.00, P50 1.27, floor 0.6, mean 1.44. The tail is
// under-determined by the available anchors.
QuantileDistribution big_dam_schedule_distribution();

inline constexpr double kDefaultFloor = 0.4;
inline const std::vector<double> kDefaultNpvProbs = {0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95};

struct StressConfig {
  std::uint64_t n_trials = 10000;
  std::uint64_t seed = 0;
  Uncertain capex = Fixed{1.0};                // capex overrun multiplier k
  std::optional<Uncertain> schedule;           // slippage ratio
  double est_duration_years = 0.0;             // delay = max(0, slippage - 1) x duration
  Uncertain shortfall = Fixed{0.0};            // benefit shortfall s, benefits x (1 - s)
  std::vector<double> npv_probs = kDefaultNpvProbs;
};

struct StressResult {
  double p_break = 0.0;  // share of trials with BCR < 1
  double p_break_se = 0.0;
  std::map<double, double> npv_quantiles;
  double mean_npv = 0.0;
  std::uint64_t n_trials = 0;
  std::uint64_t seed = 0;
};

// Random stream tags; draws for trial i are uniform_open(seed, i, tag).
enum class DrawTag : std::uint32_t { Capex = 0, Schedule = 1, Shortfall = 2 };

// Evaluates stressed NPV/BCR from precomputed present values. Equivalent
// to appraising apply_stress(model, k, b, d) up to rounding.
class StressEvaluator {
 public:
  explicit StressEvaluator(const cashflow::AppraisalModel& model);

  struct Outcome {
    double npv;
    double bcr;
  };
  Outcome evaluate(double cost_mult, double benefit_mult, double delay_years) const;

 private:
  double rate_;
  double pv_capex_;
  double pv_om_;
  double pv_benefits_;
};

// Deterministic for (model, config) whatever the thread count; threads = 0
// picks std::thread::hardware_concurrency().
StressResult run_stress(const cashflow::AppraisalModel& model, const StressConfig& config,
                        unsigned threads = 0);

// 1 - CDF(k*): the break probability of a capex-only stress.
double p_break_analytic(const QuantileDistribution& dist, double break_even_overrun);

struct GridCell {
  std::optional<double> irr;
  double bcr = 0.0;
};

// cells[i][j] is cost_mults[i] (row) by benefit_mults[j] (column).
struct SensitivityGrid {
  std::vector<double> benefit_mults;
  std::vector<double> cost_mults;
  std::vector<std::vector<GridCell>> cells;
};

SensitivityGrid sensitivity_grid(const cashflow::AppraisalModel& model,
                                 const std::vector<double>& benefit_mults,
                                 const std::vector<double>& cost_mults);

struct Contingency {
  double contingency = 0.0;  // uplift fraction c
  double adjusted_bcr = 0.0;
  bool proceed = false;      // adjusted_bcr > 1
};

Contingency size_contingency(const cashflow::AppraisalModel& model, const Uncertain& capex,
                             double coverage);

}  // namespace fragilis::stress
