#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fragilis/cashflow.hpp"
#include "fragilis/error.hpp"
#include "fragilis/rng.hpp"
#include "fragilis/stress.hpp"
#include "generators.hpp"

using namespace fragilis;
using namespace fragilis::stress;
using cashflow::AppraisalModel;
using cashflow::CashFlow;
using cashflow::CashFlowStream;

namespace {

// Capex 20 a year for five years, a flat benefit for fifty, sized to the
// requested BCR.
AppraisalModel dam_model(double target_bcr, double rate = 0.11) {
  std::vector<CashFlow> capex;
  std::vector<CashFlow> ben;
  double pv_capex = 0.0;
  double annuity = 0.0;
  for (int t = 0; t < 5; ++t) {
    capex.push_back({static_cast<double>(t), 20.0});
    pv_capex += 20.0 / std::pow(1.0 + rate, t);
  }
  for (int t = 5; t < 55; ++t) annuity += 1.0 / std::pow(1.0 + rate, t);
  const double level = target_bcr * pv_capex / annuity;
  for (int t = 5; t < 55; ++t) ben.push_back({static_cast<double>(t), level});
  return AppraisalModel(CashFlowStream(capex), {}, CashFlowStream(ben), rate);
}

AppraisalModel scale_benefits(const AppraisalModel& m, double f) {
  return AppraisalModel(m.capex(), m.om(), m.benefits().transformed(f, 0.0), m.discount_rate(), m.base_year());
}

// Independent GPD quantile: x_last + sigma/xi ((1 - q)^-xi - 1), q the
// conditional tail probability.
double gpd_quantile(double x_last, double p_last, const GpdTail& tail, double u) {
  const double q = (u - p_last) / (1.0 - p_last);
  return x_last + tail.sigma / tail.xi * (std::pow(1.0 - q, -tail.xi) - 1.0);
}

// Composite Simpson integral of the quantile function over [a, b].
double simpson_quantile(const QuantileDistribution& d, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = d.quantile(a) + d.quantile(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * d.quantile(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_SUITE("stress") {
  TEST_CASE("canonical dam distribution reproduces its anchors") {
    const auto d = big_dam_cost_distribution();
    for (const auto& a : d.anchors()) CHECK(d.quantile(a.p) == a.x);
    CHECK(d.quantile(0.80) == 1.99);
    CHECK(d.quantile(0.90) == 3.07);
    CHECK(d.floor_x() == kDefaultFloor);
    CHECK(std::abs(d.mean() - 1.96) <= 1e-6 * 1.96);
    CHECK(d.tail().xi > 0.0);
    CHECK(d.tail().xi < 1.0);
    CHECK(d.tail().sigma == doctest::Approx(d.junction_scale()).epsilon(1e-14));
    CHECK(d.quantile(0.99) == doctest::Approx(gpd_quantile(3.07, 0.90, d.tail(), 0.99)).epsilon(1e-12));
    CHECK(d.quantile(0.99) == doctest::Approx(10.854412770260648).epsilon(1e-9));
    CHECK(d.quantile(0.6) == doctest::Approx(1.5324519644827275).epsilon(1e-12));
    // Between anchors the body is log-linear.
    CHECK(d.quantile(0.375) == doctest::Approx(std::sqrt(1.0 * 1.27)).epsilon(1e-12));
    CHECK(d.quantile(0.125) == doctest::Approx(std::sqrt(0.4 * 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(d.quantile(0.0), DomainError);
    CHECK_THROWS_AS(d.quantile(1.0), DomainError);
  }

  TEST_CASE("schedule distribution") {
    const auto d = big_dam_schedule_distribution();
    CHECK(d.quantile(0.5) == 1.27);
    CHECK(d.quantile(0.2) == 1.0);
    CHECK(std::abs(d.mean() - 1.44) <= 1e-6 * 1.44);
  }

  TEST_CASE("single anchor with an explicit tail") {
    const auto d = QuantileDistribution::build({{0.5, 1.0}}, 0.5, GpdTail{0.2, 0.3});
    CHECK(d.quantile(0.5) == 1.0);
    CHECK(d.quantile(0.75) == doctest::Approx(gpd_quantile(1.0, 0.5, {0.2, 0.3}, 0.75)).epsilon(1e-12));
    CHECK(d.mean_target() == std::nullopt);
  }

  TEST_CASE("build errors") {
    CHECK_THROWS_AS(QuantileDistribution::build({{0.5, 1.2}, {0.4, 1.3}}, 0.4, CalibrateMean{2.0}), DomainError);
    CHECK_THROWS_AS(QuantileDistribution::build({{0.4, 1.2}, {0.5, 1.1}}, 0.4, CalibrateMean{2.0}), DomainError);
    CHECK_THROWS_AS(QuantileDistribution::build({{0.5, 1.0}}, 1.0, GpdTail{0.2, 0.3}), DomainError);
    CHECK_THROWS_AS(QuantileDistribution::build({{0.5, 1.0}}, 0.5, GpdTail{1.0, 0.3}), DomainError);
    CHECK_THROWS_AS(QuantileDistribution::build({{0.5, 1.0}}, 0.5, GpdTail{0.2, 0.0}), DomainError);
    CHECK_THROWS_AS(QuantileDistribution::build({}, 0.5, GpdTail{0.2, 0.3}), DomainError);
    // Target below the body mean cannot be met by any positive shape.
    CHECK_THROWS_AS(QuantileDistribution::build({{0.5, 1.0}}, 0.5, CalibrateMean{0.9}), ComputationError);
    // Target needing an infinite-mean tail.
    CHECK_THROWS_AS(QuantileDistribution::build({{0.5, 1.0}}, 0.5, CalibrateMean{500.0}), ComputationError);
  }

  TEST_CASE("inverse CDF is strictly increasing and round-trips") {
    const auto d = big_dam_cost_distribution();
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> unit(1e-9, 1.0 - 1e-9);
    for (int i = 0; i < 10000; ++i) {
      double a = unit(gen);
      double b = unit(gen);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      CHECK(d.quantile(a) < d.quantile(b));
    }
    for (int k = 1; k <= 99; ++k) {
      const double p = k / 100.0;
      CHECK(std::abs(d.cdf(d.quantile(p)) - p) < 1e-9);
    }
    CHECK(d.cdf(0.3) == 0.0);
    CHECK(d.cdf(0.4) == 0.0);
  }

  TEST_CASE("partial expectation matches quadrature") {
    const auto d = big_dam_cost_distribution();
    for (double p : {0.1, 0.25, 0.53, 0.8, 0.9, 0.95, 0.99}) {
      const double lo = 1e-12;
      // The body is split at the anchors so Simpson sees smooth pieces.
      double quad = 0.0;
      double from = lo;
      for (const auto& a : d.anchors()) {
        if (a.p >= p) break;
        quad += simpson_quantile(d, from, a.p);
        from = a.p;
      }
      quad += simpson_quantile(d, from, p);
      CHECK(d.partial_expectation(p) == doctest::Approx(quad).epsilon(1e-8));
    }
    CHECK(d.partial_expectation(1.0) == doctest::Approx(d.mean()).epsilon(1e-14));
  }

  TEST_CASE("calibrated tail: sample mean and trimmed mean") {
    const auto d = big_dam_cost_distribution();
    constexpr std::uint64_t n = 10'000'000;
    constexpr double trim = 0.999;
    double sum = 0.0;
    double sum_sq = 0.0;
    double trimmed = 0.0;
    std::uint64_t kept = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double u = rng::uniform_open(99, i, 0);
      const double x = d.quantile(u);
      sum += x;
      sum_sq += x * x;
      if (u <= trim) {
        trimmed += x;
        ++kept;
      }
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    MESSAGE("sample mean " << mean << " se " << se);
    CHECK(std::abs(mean - 1.96) < 4.0 * se);
    // Mean below the 99.9th percentile converges at the usual rate.
    const double trimmed_mean = trimmed / kept;
    CHECK(trimmed_mean == doctest::Approx(d.partial_expectation(trim) / trim).epsilon(2e-3));
  }

  TEST_CASE("evaluator agrees with apply_stress") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> k(0.4, 5.0);
    std::uniform_real_distribution<double> b(0.2, 1.5);
    std::uniform_real_distribution<double> delay(0.0, 8.0);
    for (int i = 0; i < 300; ++i) {
      const auto m = testing::random_model(gen);
      const StressEvaluator ev(m);
      const double kk = k(gen);
      const double bb = b(gen);
      const double dd = i % 3 ? delay(gen) : 0.0;
      const auto stressed = cashflow::apply_stress(m, kk, bb, dd);
      const auto out = ev.evaluate(kk, bb, dd);
      CHECK(out.npv == doctest::Approx(cashflow::npv(stressed)).epsilon(1e-9));
      CHECK(out.bcr == doctest::Approx(cashflow::bcr(stressed)).epsilon(1e-12));
    }
  }

  TEST_CASE("degenerate inputs never break a 1.4 model") {
    StressConfig cfg;
    cfg.n_trials = 2000;
    cfg.seed = 1;
    cfg.capex = Fixed{1.0};
    cfg.schedule = Fixed{1.0};
    cfg.est_duration_years = 5.0;
    cfg.shortfall = Fixed{0.0};
    const auto r = run_stress(dam_model(1.4), cfg, 2);
    CHECK(r.p_break == 0.0);
    CHECK(r.p_break_se == 0.0);
    CHECK(r.npv_quantiles.at(0.05) == doctest::Approx(r.npv_quantiles.at(0.95)));
    CHECK(r.mean_npv == doctest::Approx(cashflow::npv(dam_model(1.4))));
    cfg.n_trials = 0;
    CHECK_THROWS_AS(run_stress(dam_model(1.4), cfg), DomainError);
  }

  TEST_CASE("stress results do not depend on the thread count") {
    const auto model = dam_model(1.4);
    StressConfig cfg;
    cfg.n_trials = 30001;
    cfg.capex = big_dam_cost_distribution();
    cfg.schedule = big_dam_schedule_distribution();
    cfg.est_duration_years = 6.0;
    cfg.shortfall = Fixed{0.1};
    for (std::uint64_t seed : {1ULL, 7ULL, 12345ULL}) {
      cfg.seed = seed;
      const auto one = run_stress(model, cfg, 1);
      for (unsigned threads : {2u, 3u, 8u}) {
        const auto many = run_stress(model, cfg, threads);
        CHECK(many.p_break == one.p_break);
        CHECK(many.mean_npv == one.mean_npv);
        CHECK(many.npv_quantiles == one.npv_quantiles);
      }
    }
  }

  TEST_CASE("capex-only stress agrees with the analytic break probability") {
    const auto model = dam_model(1.4);
    const auto dist = big_dam_cost_distribution();
    const double analytic = p_break_analytic(dist, cashflow::break_even_overrun(model).multiplier);
    CHECK(std::abs(analytic - 0.47) < 0.005);
    StressConfig cfg;
    cfg.n_trials = 20000;
    cfg.capex = dist;
    int outside = 0;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      cfg.seed = seed;
      const auto r = run_stress(model, cfg, 1);
      CHECK(r.p_break_se == doctest::Approx(std::sqrt(r.p_break * (1 - r.p_break) / cfg.n_trials)));
      if (std::abs(r.p_break - analytic) > 3.0 * r.p_break_se) ++outside;
    }
    // A 3-se band misses about 0.3% of the time; allow one stray seed.
    CHECK(outside <= 1);
  }

  TEST_CASE("p_break_analytic") {
    const auto d = big_dam_cost_distribution();
    CHECK(p_break_analytic(d, 1.40) == doctest::Approx(0.47).epsilon(1e-12));
    CHECK(p_break_analytic(d, 0.40) == 1.0);
    CHECK(p_break_analytic(d, 0.2) == 1.0);
    CHECK(p_break_analytic(d, 3.07) == doctest::Approx(0.10).epsilon(1e-12));
    CHECK_THROWS_AS(p_break_analytic(d, 0.0), DomainError);
  }

  TEST_CASE("p_break is non-increasing in base BCR") {
    std::mt19937_64 gen(19);
    StressConfig cfg;
    cfg.n_trials = 4000;
    cfg.seed = 5;
    cfg.capex = big_dam_cost_distribution();
    cfg.schedule = big_dam_schedule_distribution();
    cfg.est_duration_years = 4.0;
    for (int i = 0; i < 20; ++i) {
      const auto base = testing::random_model(gen, 0.02, 0.15);
      double prev = 1.0;
      for (double f : {0.6, 0.9, 1.2, 1.6, 2.5, 4.0}) {
        const double p = run_stress(scale_benefits(base, f), cfg, 1).p_break;
        CHECK(p <= prev);
        prev = p;
      }
    }
  }

  TEST_CASE("sensitivity grid") {
    std::mt19937_64 gen(23);
    const auto m = testing::random_model(gen, 0.03, 0.12);
    const auto id = sensitivity_grid(m, {1.0}, {1.0});
    REQUIRE(id.cells.size() == 1);
    CHECK(id.cells[0][0].bcr == doctest::Approx(cashflow::bcr(m)).epsilon(1e-12));
    CHECK(id.cells[0][0].irr == cashflow::irr(m.net_stream()));

    const std::vector<double> bm{0.8, 1.0, 1.3};
    const std::vector<double> cm{0.9, 1.0, 1.5};
    const auto g = sensitivity_grid(m, bm, cm);
    REQUIRE(g.cells.size() == 3);
    for (std::size_t i = 0; i < cm.size(); ++i) {
      REQUIRE(g.cells[i].size() == 3);
      for (std::size_t j = 0; j < bm.size(); ++j) {
        const auto cell = cashflow::apply_stress(m, cm[i], bm[j], 0.0);
        CHECK(g.cells[i][j].bcr == doctest::Approx(cashflow::bcr(cell)).epsilon(1e-12));
        const auto want = cashflow::irr(cell.net_stream());
        REQUIRE(g.cells[i][j].irr.has_value() == want.has_value());
        if (want) CHECK(*g.cells[i][j].irr == doctest::Approx(*want).epsilon(1e-10));
      }
    }
    CHECK_THROWS_AS(sensitivity_grid(m, {0.0}, {1.0}), DomainError);
  }

  TEST_CASE("grid on a model with a 15% base IRR") {
    // Benefits sized so the net stream discounts to zero at 15%.
    const auto m = dam_model(1.0, 0.15);
    REQUIRE(cashflow::irr(m.net_stream()).has_value());
    CHECK(*cashflow::irr(m.net_stream()) == doctest::Approx(0.15).epsilon(1e-8));
    const auto g = sensitivity_grid(m, {0.85, 1.0, 1.15}, {1.0, 1.15});
    for (const auto& row : g.cells)
      for (std::size_t j = 1; j < row.size(); ++j) CHECK(*row[j].irr > *row[j - 1].irr);
    for (std::size_t j = 0; j < 3; ++j) CHECK(*g.cells[1][j].irr < *g.cells[0][j].irr);
  }

  TEST_CASE("contingency sizing") {
    const auto d = big_dam_cost_distribution();
    const auto model = dam_model(1.4);
    const auto median = size_contingency(model, d, 0.5);
    CHECK(median.contingency == doctest::Approx(0.27).epsilon(1e-12));

    const auto p80 = size_contingency(model, d, 0.8);
    CHECK(p80.contingency == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(p80.adjusted_bcr == doctest::Approx(1.4 / 1.99).epsilon(1e-9));
    CHECK_FALSE(p80.proceed);

    const auto flat = size_contingency(model, Fixed{1.0}, 0.8);
    CHECK(flat.contingency == 0.0);
    CHECK(flat.adjusted_bcr == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(flat.proceed);
    CHECK_THROWS_AS(size_contingency(model, d, 1.0), DomainError);
  }
}
