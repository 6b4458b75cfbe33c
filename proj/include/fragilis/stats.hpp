#pragma once

// Kernel density traces and the three hypothesis tests used on reference
// classes: Mann-Whitney U, one-way ANOVA F and the OLS trend F.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fragilis::stats {

inline constexpr std::size_t kDensityGridSize = 512;

struct DensityTrace {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

enum class Method { Exact, NormalApprox };
std::string_view to_string(Method m);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Method method = Method::Exact;
  // Mann-Whitney: sizes of x and y. F tests: numerator and denominator
  // degrees of freedom.
  std::size_t n = 0;
  std::size_t m = 0;
};

struct TrendResult {
  TestResult test;  // F = t^2 for slope = 0, (1, n - 2) degrees of freedom
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// 0.9 min(sd, IQR / 1.34) n^(-1/5); falls back to sd when the IQR is 0.
// Throws ComputationError when the sample has no spread.
double silverman_bandwidth(std::span<const double> sample);

// Gaussian KDE on a 512-point grid spanning [min - 4h, max + 4h].
DensityTrace kde(std::span<const double> sample, std::optional<double> bandwidth = std::nullopt);

// Two-sample U = #{x_i > y_j} + 0.5 #{x_i == y_j}. Two-sided p is exact
// (enumeration over all splits of the pooled sample) when n + m <= 12,
// otherwise the tie-corrected normal approximation with continuity
// correction.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kExactMannWhitneyLimit = 12;

TestResult one_way_f(const std::vector<std::vector<double>>& groups);

TrendResult trend_f(std::span<const double> x, std::span<const double> y);

// ---- distribution functions ----------------------------------------------

double normal_cdf(double z);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

// Upper tail P(F > f) for F(d1, d2).
double f_survival(double f, double d1, double d2);

}  // namespace fragilis::stats
