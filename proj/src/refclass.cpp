#include "fragilis/refclass.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "fragilis/error.hpp"
#include "fragilis/numeric.hpp"

namespace fragilis::refclass {

namespace {

constexpr std::array<std::pair<Region, std::string_view>, 6> kRegionNames{{
    {Region::NorthAmerica, "NorthAmerica"},
    {Region::SouthAmerica, "SouthAmerica"},
    {Region::Africa, "Africa"},
    {Region::Asia, "Asia"},
    {Region::Europe, "Europe"},
    {Region::Oceania, "Oceania"},
}};

constexpr std::array<std::string_view, 12> kColumns{
    "id",         "name",       "country",     "region",     "project_type", "decision_year",
    "est_cost",   "act_cost",   "est_months",  "act_months", "est_benefit",  "act_benefit"};

std::string squash(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits one CSV record; double quotes may wrap fields and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back().push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", row);
  return fields;
}

double parse_double(std::string_view text, std::size_t row, std::string_view field) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
    throw ParseError("not a number: '" + std::string(text) + "'", row, std::string(field));
  return value;
}

int parse_int(std::string_view text, std::size_t row, std::string_view field) {
  text = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("not an integer: '" + std::string(text) + "'", row, std::string(field));
  return value;
}

std::optional<double> parse_optional(std::string_view text, std::size_t row, std::string_view field) {
  if (trim(text).empty()) return std::nullopt;
  return parse_double(text, row, field);
}

ProjectRecord parse_row(const std::vector<std::string>& f, std::size_t row) {
  if (f.size() != kColumns.size())
    throw ParseError("expected " + std::to_string(kColumns.size()) + " fields, got " +
                         std::to_string(f.size()),
                     row);
  ProjectRecord rec;
  rec.id = std::string(trim(f[0]));
  rec.name = f[1];
  rec.country = f[2];
  const auto region = parse_region(f[3]);
  if (!region) throw ParseError("unknown region '" + f[3] + "'", row, "region");
  rec.region = *region;
  rec.project_type = std::string(trim(f[4]));
  rec.decision_year = parse_int(f[5], row, kColumns[5]);
  rec.est_cost = parse_double(f[6], row, kColumns[6]);
  rec.act_cost = parse_double(f[7], row, kColumns[7]);
  rec.est_months = parse_double(f[8], row, kColumns[8]);
  rec.act_months = parse_double(f[9], row, kColumns[9]);
  rec.est_benefit = parse_optional(f[10], row, kColumns[10]);
  rec.act_benefit = parse_optional(f[11], row, kColumns[11]);
  if (rec.id.empty()) throw ParseError("empty id", row, "id");
  try {
    validate(rec);
  } catch (const DomainError& e) {
    throw ParseError(e.what(), row);
  }
  return rec;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view to_string(Region region) {
  for (const auto& [r, name] : kRegionNames)
    if (r == region) return name;
  return "Unknown";
}

std::optional<Region> parse_region(std::string_view text) {
  const auto key = squash(text);
  for (const auto& [r, name] : kRegionNames)
    if (squash(name) == key) return r;
  return std::nullopt;
}

void validate(const ProjectRecord& rec) {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError(std::string(field) + " must be a finite number > 0");
  };
  positive(rec.est_cost, "est_cost");
  positive(rec.act_cost, "act_cost");
  positive(rec.est_months, "est_months");
  positive(rec.act_months, "act_months");
  if (rec.decision_year < 1900 || rec.decision_year > 2100)
    throw DomainError("decision_year must lie in [1900, 2100]");
  for (const auto& b : {rec.est_benefit, rec.act_benefit})
    if (b && !std::isfinite(*b)) throw DomainError("benefit values must be finite");
}

ReferenceClass::ReferenceClass(std::vector<ProjectRecord> records, std::string label)
    : records_(std::move(records)), label_(std::move(label)) {
  std::set<std::string> seen;
  for (const auto& r : records_) {
    validate(r);
    if (!seen.insert(r.id).second) throw DomainError("duplicate record id '" + r.id + "'");
  }
}

std::optional<Metric> parse_metric(std::string_view text) {
  if (text == "cost") return Metric::Cost;
  if (text == "schedule") return Metric::Schedule;
  return std::nullopt;
}

std::optional<GroupKey> parse_group_key(std::string_view text) {
  if (text == "region") return GroupKey::Region;
  if (text == "type" || text == "project_type") return GroupKey::ProjectType;
  if (text == "decade") return GroupKey::Decade;
  return std::nullopt;
}

double cost_overrun_ratio(const ProjectRecord& rec) {
  validate(rec);
  return rec.act_cost / rec.est_cost;
}

double schedule_slippage(const ProjectRecord& rec) {
  validate(rec);
  return rec.act_months / rec.est_months;
}

double metric_value(const ProjectRecord& rec, Metric metric) {
  return metric == Metric::Cost ? cost_overrun_ratio(rec) : schedule_slippage(rec);
}

std::vector<double> metric_values(const ReferenceClass& cls, Metric metric) {
  std::vector<double> out;
  out.reserve(cls.size());
  for (const auto& r : cls.records()) out.push_back(metric_value(r, metric));
  return out;
}

std::vector<std::pair<int, double>> deflate(const std::vector<std::pair<int, double>>& nominal,
                                            const std::map<int, double>& price_index,
                                            int base_year) {
  auto level = [&](int year) {
    const auto it = price_index.find(year);
    if (it == price_index.end())
      throw DomainError("price index has no entry for year " + std::to_string(year));
    if (!(it->second > 0.0))
      throw DomainError("price index for year " + std::to_string(year) + " must be > 0");
    return it->second;
  };
  const double base = level(base_year);
  std::vector<std::pair<int, double>> out;
  out.reserve(nominal.size());
  for (const auto& [year, amount] : nominal) out.emplace_back(year, amount * base / level(year));
  return out;
}

SummaryStats summarize_values(std::vector<double> values, const std::vector<double>& thresholds,
                              const std::vector<double>& extra_quantiles) {
  if (values.empty()) throw DomainError("cannot summarize an empty reference class");
  std::sort(values.begin(), values.end());
  SummaryStats s;
  s.n = values.size();
  const auto n = static_cast<double>(s.n);
  s.mean = compensated_sum(values) / n;
  s.median = quantile_sorted(values, 0.5);
  s.iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
  for (double p : kDefaultSummaryQuantiles) s.quantiles[p] = quantile_sorted(values, p);
  for (double p : extra_quantiles) s.quantiles[p] = quantile_sorted(values, p);

  const auto over_1 = values.end() - std::upper_bound(values.begin(), values.end(), 1.0);
  s.share_over_1 = static_cast<double>(over_1) / n;
  for (double tau : thresholds) {
    const auto at_or_above = values.end() - std::lower_bound(values.begin(), values.end(), tau);
    s.share_breaking[tau] = static_cast<double>(at_or_above) / n;
  }
  return s;
}

SummaryStats summarize(const ReferenceClass& cls, Metric metric,
                       const std::vector<double>& thresholds,
                       const std::vector<double>& extra_quantiles) {
  return summarize_values(metric_values(cls, metric), thresholds, extra_quantiles);
}

std::string group_label(const ProjectRecord& rec, GroupKey key) {
  switch (key) {
    case GroupKey::Region:
      return std::string(to_string(rec.region));
    case GroupKey::ProjectType:
      return rec.project_type;
    case GroupKey::Decade:
      return std::to_string(rec.decision_year / 10 * 10) + "s";
  }
  return {};
}

std::map<std::string, SummaryStats> group_stats(const ReferenceClass& cls, Metric metric,
                                                GroupKey key,
                                                const std::vector<double>& thresholds) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : cls.records()) groups[group_label(r, key)].push_back(metric_value(r, metric));
  std::map<std::string, SummaryStats> out;
  for (auto& [label, values] : groups) out.emplace(label, summarize_values(std::move(values), thresholds));
  return out;
}

double debt_burden_share(double debt_start, double debt_end, double project_cost) {
  const double increase = debt_end - debt_start;
  if (!(increase > 0.0)) throw DomainError("debt increase must be positive");
  return project_cost / increase;
}

IngestReport read_csv(std::istream& in, const IngestOptions& options) {
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw ParseError("missing CSV header", 1);
  ++row;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line, row);
  if (header.size() != kColumns.size())
    throw ParseError("header must have " + std::to_string(kColumns.size()) + " columns", row);
  for (std::size_t i = 0; i < kColumns.size(); ++i)
    if (trim(header[i]) != kColumns[i])
      throw ParseError("expected column '" + std::string(kColumns[i]) + "'", row, header[i]);

  IngestReport report;
  std::vector<ProjectRecord> records;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++report.rows_read;
    try {
      auto rec = parse_row(split_csv_line(line, row), row);
      if (!ids.insert(rec.id).second) throw ParseError("duplicate id '" + rec.id + "'", row, "id");
      records.push_back(std::move(rec));
    } catch (const ParseError& e) {
      if (options.strict) throw;
      ++report.rows_skipped;
      report.diagnostics.emplace_back(e.what());
    }
  }
  report.records = ReferenceClass(std::move(records), options.label);
  return report;
}

IngestReport read_csv_file(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  auto opts = options;
  if (opts.label.empty()) opts.label = path;
  return read_csv(in, opts);
}

void write_csv(std::ostream& out, const ReferenceClass& cls) {
  out << kCsvHeader << '\n';
  for (const auto& r : cls.records()) {
    out << quote_if_needed(r.id) << ',' << quote_if_needed(r.name) << ','
        << quote_if_needed(r.country) << ',' << to_string(r.region) << ','
        << quote_if_needed(r.project_type) << ',' << r.decision_year << ','
        << format_double(r.est_cost) << ',' << format_double(r.act_cost) << ','
        << format_double(r.est_months) << ',' << format_double(r.act_months) << ','
        << (r.est_benefit ? format_double(*r.est_benefit) : "") << ','
        << (r.act_benefit ? format_double(*r.act_benefit) : "") << '\n';
  }
}

}  // namespace fragilis::refclass
