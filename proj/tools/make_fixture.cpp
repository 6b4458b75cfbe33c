// Generates the bundled synthetic reference class: 245 dam-like records
// whose cost and schedule ratios are stratified draws from the canonical
// big-dam distributions, plus a ground-truth summary computed directly
// from the written CSV values.
//
//   make_fixture <out.csv> <out.truth.json> [seed]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fragilis/rng.hpp"
#include "fragilis/stress.hpp"

namespace {

constexpr int kRecords = 245;
constexpr std::uint64_t kDefaultSeed = 20140601;

const char* kRegions[] = {"NorthAmerica", "SouthAmerica", "Africa", "Asia", "Europe", "Oceania"};
const char* kTypes[] = {"hydroelectric", "irrigation", "multipurpose", "water_supply"};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Type 7 quantile over a sorted copy, written out independently of the
// library so the truth file is a separate computation.
double truth_quantile(const std::vector<double>& sorted, double p) {
  const double h = (sorted.size() - 1) * p;
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + (h - i) * (sorted[i + 1] - sorted[i]);
}

nlohmann::json truth_summary(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  long double sum = 0.0L;
  for (double x : v) sum += x;
  const double n = static_cast<double>(v.size());
  nlohmann::json q = nlohmann::json::array();
  for (double p : {0.10, 0.25, 0.50, 0.75, 0.80, 0.90})
    q.push_back({{"p", p}, {"value", truth_quantile(v, p)}});
  nlohmann::json b = nlohmann::json::array();
  for (double tau : {1.0, 1.4, 2.0, 3.0}) {
    const auto count = std::count_if(v.begin(), v.end(), [&](double x) { return x >= tau; });
    b.push_back({{"threshold", tau}, {"share", count / n}, {"count", count}});
  }
  const auto over = std::count_if(v.begin(), v.end(), [](double x) { return x > 1.0; });
  return {{"n", v.size()},
          {"mean", static_cast<double>(sum / v.size())},
          {"median", truth_quantile(v, 0.5)},
          {"iqr", truth_quantile(v, 0.75) - truth_quantile(v, 0.25)},
          {"quantiles", q},
          {"share_over_1", over / n},
          {"count_over_1", over},
          {"share_breaking", b}};
}

// A random permutation of 0..n-1 from counter-based draws.
std::vector<int> permutation(std::uint64_t seed, std::uint32_t tag) {
  std::vector<std::pair<double, int>> keyed;
  for (int i = 0; i < kRecords; ++i) keyed.emplace_back(fragilis::rng::uniform_open(seed, i, tag), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  for (const auto& [_, i] : keyed) out.push_back(i);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: make_fixture <out.csv> <out.truth.json> [seed]\n";
    return 2;
  }
  const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : kDefaultSeed;
  const auto cost = fragilis::stress::big_dam_cost_distribution();
  const auto schedule = fragilis::stress::big_dam_schedule_distribution();
  using fragilis::rng::uniform_open;

  // Stratified: record i gets stratum perm[i], so each of the 245 equal
  // probability bins is hit exactly once.
  const auto cost_perm = permutation(seed, 10);
  const auto sched_perm = permutation(seed, 11);

  std::ostringstream csv;
  csv << "id,name,country,region,project_type,decision_year,est_cost,act_cost,est_months,act_months,"
         "est_benefit,act_benefit\n";
  std::vector<double> cost_ratios;
  std::vector<double> schedule_ratios;
  nlohmann::json regions = nlohmann::json::object();
  for (int i = 0; i < kRecords; ++i) {
    const double u_cost = (cost_perm[i] + uniform_open(seed, i, 0)) / kRecords;
    const double u_sched = (sched_perm[i] + uniform_open(seed, i, 1)) / kRecords;
    const double est_cost = std::round(50.0 + 4950.0 * uniform_open(seed, i, 2));
    const double est_months = std::round(36.0 + 84.0 * uniform_open(seed, i, 3));
    const std::string act_cost = fixed(est_cost * cost.quantile(u_cost), 2);
    const std::string act_months = fixed(est_months * schedule.quantile(u_sched), 1);
    const char* region = kRegions[static_cast<int>(uniform_open(seed, i, 4) * 6)];
    const char* type = kTypes[static_cast<int>(uniform_open(seed, i, 5) * 4)];
    const int year = 1934 + static_cast<int>(uniform_open(seed, i, 6) * 73);  // 1934..2006
    std::string est_benefit;
    std::string act_benefit;
    if (uniform_open(seed, i, 7) < 0.35) {  // benefit data exists for a minority of projects
      const double eb = std::round(est_cost * (1.2 + 0.6 * uniform_open(seed, i, 8)));
      est_benefit = fixed(eb, 0);
      act_benefit = fixed(eb * (0.6 + 0.5 * uniform_open(seed, i, 9)), 1);
    }

    char id[16];
    std::snprintf(id, sizeof id, "SYN-%03d", i + 1);
    csv << id << ",Synthetic dam " << i + 1 << ",Synthland," << region << ',' << type << ',' << year
        << ',' << fixed(est_cost, 0) << ',' << act_cost << ',' << fixed(est_months, 0) << ',' << act_months
        << ',' << est_benefit << ',' << act_benefit << '\n';

    // Truth uses the values exactly as written to the CSV.
    cost_ratios.push_back(std::stod(act_cost) / est_cost);
    schedule_ratios.push_back(std::stod(act_months) / est_months);
    regions[region] = regions.value(region, 0) + 1;
  }

  std::ofstream(argv[1], std::ios::binary) << csv.str();
  const nlohmann::json truth{
      {"description", "Ground truth for the synthetic 245-record fixture; computed from the CSV values."},
      {"seed", seed},
      {"cost", truth_summary(cost_ratios)},
      {"schedule", truth_summary(schedule_ratios)},
      {"region_counts", regions}};
  std::ofstream(argv[2], std::ios::binary) << truth.dump(2) << "\n";
  return 0;
}
