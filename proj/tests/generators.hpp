#pragma once

// Hand-rolled generators for property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "fragilis/cashflow.hpp"

namespace fragilis::testing {

// Conventional project shape: capex up front, benefits (and optional O&M)
// afterwards. Stream lengths, amounts and timing are randomized.
inline cashflow::AppraisalModel random_model(std::mt19937_64& gen, double rate_lo = 0.0,
                                             double rate_hi = 0.25, bool with_om = true) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> build_years(1, 8);
  std::uniform_int_distribution<int> life(5, 60);
  const int build = build_years(gen);
  const int ops = life(gen);
  std::vector<cashflow::CashFlow> capex;
  std::vector<cashflow::CashFlow> om;
  std::vector<cashflow::CashFlow> ben;
  for (int t = 0; t < build; ++t) capex.push_back({t + 0.5 * unit(gen), 10.0 + 200.0 * unit(gen)});
  const double level = 5.0 + 60.0 * unit(gen);
  const double om_share = with_om && unit(gen) < 0.6 ? 0.3 * unit(gen) : 0.0;
  for (int t = build; t < build + ops; ++t) {
    ben.push_back({static_cast<double>(t), level * (0.5 + unit(gen))});
    if (om_share > 0.0) om.push_back({static_cast<double>(t), level * om_share * (0.5 + unit(gen))});
  }
  const double rate = rate_lo + (rate_hi - rate_lo) * unit(gen);
  return cashflow::AppraisalModel(cashflow::CashFlowStream(capex), cashflow::CashFlowStream(om),
                                  cashflow::CashFlowStream(ben), rate);
}

inline std::vector<double> random_sample(std::mt19937_64& gen, std::size_t n, double lo = 0.3,
                                         double hi = 4.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = d(gen);
  return out;
}

}  // namespace fragilis::testing
