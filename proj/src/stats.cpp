#include "fragilis/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fragilis/error.hpp"
#include "fragilis/numeric.hpp"

namespace fragilis::stats {

namespace {

double mean_of(std::span<const double> v) { return compensated_sum(v) / static_cast<double>(v.size()); }

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw ComputationError("incomplete beta continued fraction did not converge");
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::Exact ? "exact" : "normal_approx"; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw DomainError("F distribution needs positive degrees of freedom");
  if (std::isnan(f)) throw DomainError("F statistic is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F > f) = I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2)
  return incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

double silverman_bandwidth(std::span<const double> sample) {
  if (sample.size() < 2) throw ComputationError("bandwidth required: sample has fewer than 2 points");
  const double mean = mean_of(sample);
  CompensatedSum ss;
  for (double v : sample) ss.add((v - mean) * (v - mean));
  const double sd = std::sqrt(ss.value() / static_cast<double>(sample.size() - 1));
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) throw ComputationError("bandwidth required: sample has zero variance");
  return 0.9 * spread * std::pow(static_cast<double>(sample.size()), -0.2);
}

DensityTrace kde(std::span<const double> sample, std::optional<double> bandwidth) {
  if (sample.empty()) throw DomainError("kde needs at least one observation");
  for (double v : sample)
    if (!std::isfinite(v)) throw DomainError("kde sample values must be finite");
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(sample);
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("bandwidth must be finite and > 0");

  const auto [min_it, max_it] = std::minmax_element(sample.begin(), sample.end());
  const double lo = *min_it - 4.0 * h;
  const double hi = *max_it + 4.0 * h;
  const double step = (hi - lo) / static_cast<double>(kDensityGridSize - 1);
  const double norm = 1.0 / (static_cast<double>(sample.size()) * h * std::sqrt(2.0 * std::numbers::pi));

  DensityTrace trace;
  trace.bandwidth = h;
  trace.grid.resize(kDensityGridSize);
  trace.density.resize(kDensityGridSize);
  for (std::size_t i = 0; i < kDensityGridSize; ++i) {
    const double x = i + 1 == kDensityGridSize ? hi : lo + step * static_cast<double>(i);
    trace.grid[i] = x;
    double sum = 0.0;
    for (double v : sample) {
      const double z = (x - v) / h;
      sum += std::exp(-0.5 * z * z);
    }
    trace.density[i] = sum * norm;
  }
  return trace;
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw DomainError("Mann-Whitney needs two non-empty samples");
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  auto u_of = [](std::span<const double> a, std::span<const double> b) {
    double u = 0.0;
    for (double ai : a)
      for (double bj : b) u += ai > bj ? 1.0 : (ai == bj ? 0.5 : 0.0);
    return u;
  };

  TestResult res;
  res.statistic = u_of(x, y);
  res.n = n;
  res.m = m;
  const double centre = 0.5 * static_cast<double>(n * m);
  const double observed_dev = std::abs(res.statistic - centre);

  if (n + m <= kExactMannWhitneyLimit) {
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    const std::size_t total = pooled.size();
    std::size_t count = 0;
    std::size_t extreme = 0;
    std::vector<double> a;
    std::vector<double> b;
    for (unsigned mask = 0; mask < (1u << total); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
      a.clear();
      b.clear();
      for (std::size_t i = 0; i < total; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
      ++count;
      // U takes values on a half-integer lattice, so a 1e-9 slack is exact.
      if (std::abs(u_of(a, b) - centre) >= observed_dev - 1e-9) ++extreme;
    }
    res.method = Method::Exact;
    res.p_value = static_cast<double>(extreme) / static_cast<double>(count);
    return res;
  }

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::sort(pooled.begin(), pooled.end());
  const auto big_n = static_cast<double>(pooled.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double nm = static_cast<double>(n * m);
  const double variance = nm / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  res.method = Method::NormalApprox;
  if (!(variance > 0.0)) {
    res.p_value = 1.0;
    return res;
  }
  const double z = std::max(0.0, observed_dev - 0.5) / std::sqrt(variance);
  res.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
  return res;
}

TestResult one_way_f(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw DomainError("one-way F needs at least two groups");
  std::size_t total = 0;
  CompensatedSum grand;
  for (const auto& g : groups) {
    if (g.empty()) throw DomainError("one-way F groups must be non-empty");
    total += g.size();
    for (double v : g) grand.add(v);
  }
  const std::size_t k = groups.size();
  if (total <= k) throw DomainError("one-way F needs more observations than groups");
  const double grand_mean = grand.value() / static_cast<double>(total);

  CompensatedSum ss_between;
  CompensatedSum ss_within;
  for (const auto& g : groups) {
    const double gm = mean_of(g);
    ss_between.add(static_cast<double>(g.size()) * (gm - grand_mean) * (gm - grand_mean));
    for (double v : g) ss_within.add((v - gm) * (v - gm));
  }
  if (!(ss_within.value() > 0.0))
    throw ComputationError("one-way F undefined: zero variance within every group");

  const auto df1 = static_cast<double>(k - 1);
  const auto df2 = static_cast<double>(total - k);
  TestResult res;
  res.statistic = (ss_between.value() / df1) / (ss_within.value() / df2);
  res.p_value = f_survival(res.statistic, df1, df2);
  res.method = Method::Exact;
  res.n = k - 1;
  res.m = total - k;
  return res;
}

TrendResult trend_f(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("trend needs paired x and y");
  if (x.size() < 3) throw DomainError("trend needs at least 3 points");
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); }))
    throw DomainError("trend undefined: all x values are equal");

  const double mx = mean_of(x);
  const double my = mean_of(y);
  CompensatedSum sxx;
  CompensatedSum sxy;
  CompensatedSum syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx.add(dx * dx);
    sxy.add(dx * dy);
    syy.add(dy * dy);
  }
  const std::size_t n = x.size();
  const double df2 = static_cast<double>(n - 2);

  TrendResult out;
  out.test.method = Method::Exact;
  out.test.n = 1;
  out.test.m = n - 2;
  const bool constant_y = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
  if (constant_y || syy.value() == 0.0) {
    out.slope = 0.0;
    out.intercept = y.front();
    out.r_squared = 0.0;
    out.test.statistic = 0.0;
    out.test.p_value = 1.0;
    return out;
  }
  out.slope = sxy.value() / sxx.value();
  out.intercept = my - out.slope * mx;
  const double ss_reg = out.slope * sxy.value();
  CompensatedSum residual;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = (y[i] - my) - out.slope * (x[i] - mx);
    residual.add(e * e);
  }
  const double ss_err = residual.value();
  out.r_squared = ss_reg / syy.value();
  if (ss_err == 0.0) {
    out.test.statistic = std::numeric_limits<double>::infinity();
    out.test.p_value = 0.0;
    return out;
  }
  out.test.statistic = ss_reg / (ss_err / df2);
  out.test.p_value = f_survival(out.test.statistic, 1.0, df2);
  return out;
}

}  // namespace fragilis::stats
