#pragma once

// Historical project records (estimated vs actual cost and schedule) and
// the measurements taken over them: overrun ratios, slippage ratios,
// constant-price deflation, summary statistics and grouped comparisons.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fragilis::refclass {

enum class Region { NorthAmerica, SouthAmerica, Africa, Asia, Europe, Oceania };

std::string_view to_string(Region region);
// Accepts the enum spelling, case-insensitively, with optional spaces,
// hyphens or underscores ("North America", "north_america").
std::optional<Region> parse_region(std::string_view text);

struct ProjectRecord {
  std::string id;
  std::string name;
  std::string country;
  Region region = Region::Asia;
  std::string project_type;
  int decision_year = 2000;
  double est_cost = 1.0;  // constant local currency, base year = decision year
  double act_cost = 1.0;
  double est_months = 1.0;
  double act_months = 1.0;
  std::optional<double> est_benefit;
  std::optional<double> act_benefit;

  friend bool operator==(const ProjectRecord&, const ProjectRecord&) = default;
};

// Throws DomainError naming the offending field.
void validate(const ProjectRecord& rec);

class ReferenceClass {
 public:
  ReferenceClass() = default;
  // Validates every record and rejects duplicate ids.
  ReferenceClass(std::vector<ProjectRecord> records, std::string label = {});

  const std::vector<ProjectRecord>& records() const noexcept { return records_; }
  const std::string& label() const noexcept { return label_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  template <typename Pred>
  ReferenceClass filter(Pred pred, std::string label) const {
    std::vector<ProjectRecord> out;
    for (const auto& r : records_)
      if (pred(r)) out.push_back(r);
    return ReferenceClass(std::move(out), std::move(label));
  }

  friend bool operator==(const ReferenceClass&, const ReferenceClass&) = default;

 private:
  std::vector<ProjectRecord> records_;
  std::string label_;
};

enum class Metric { Cost, Schedule };
enum class GroupKey { Region, ProjectType, Decade };

std::optional<Metric> parse_metric(std::string_view text);
std::optional<GroupKey> parse_group_key(std::string_view text);

double cost_overrun_ratio(const ProjectRecord& rec);
double schedule_slippage(const ProjectRecord& rec);
double metric_value(const ProjectRecord& rec, Metric metric);
std::vector<double> metric_values(const ReferenceClass& cls, Metric metric);

// Converts nominal (year, amount) pairs to base-year prices:
// amount * index(base_year) / index(year).
std::vector<std::pair<int, double>> deflate(const std::vector<std::pair<int, double>>& nominal,
                                            const std::map<int, double>& price_index,
                                            int base_year);

inline const std::vector<double> kDefaultSummaryQuantiles = {0.10, 0.25, 0.50, 0.75, 0.80, 0.90};

struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double iqr = 0.0;  // P75 - P25
  std::map<double, double> quantiles;
  double share_over_1 = 0.0;             // ratio > 1
  std::map<double, double> share_breaking;  // tau -> share with ratio >= tau
};

// Summary of raw ratios. Quantiles use linear interpolation between order
// statistics; the default quantile set is always included.
SummaryStats summarize_values(std::vector<double> values, const std::vector<double>& thresholds,
                              const std::vector<double>& extra_quantiles = {});

SummaryStats summarize(const ReferenceClass& cls, Metric metric,
                       const std::vector<double>& thresholds,
                       const std::vector<double>& extra_quantiles = {});

std::string group_label(const ProjectRecord& rec, GroupKey key);

// summarize() per group; keys sort lexicographically ("1930s" < "1940s").
std::map<std::string, SummaryStats> group_stats(const ReferenceClass& cls, Metric metric,
                                                GroupKey key,
                                                const std::vector<double>& thresholds = {});

// Project cost as a share of the growth in a debt stock over its build period.
double debt_burden_share(double debt_start, double debt_end, double project_cost);

// ---- CSV ----------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "id,name,country,region,project_type,decision_year,est_cost,act_cost,est_months,act_months,"
    "est_benefit,act_benefit";

struct IngestOptions {
  bool strict = true;
  std::string label;
};

struct IngestReport {
  ReferenceClass records;
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::vector<std::string> diagnostics;  // one per skipped row, row-numbered
};

// Row numbers in diagnostics count the header as row 1. Strict mode throws
// ParseError on the first bad row; lenient mode skips it and records why.
IngestReport read_csv(std::istream& in, const IngestOptions& options = {});
IngestReport read_csv_file(const std::string& path, const IngestOptions& options = {});

// Numbers are written in shortest round-trip form.
void write_csv(std::ostream& out, const ReferenceClass& cls);

}  // namespace fragilis::refclass
