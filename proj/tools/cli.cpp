#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "fragilis/error.hpp"
#include "fragilis/io.hpp"
#include "manifest.hpp"
#include "svg.hpp"

#ifndef FRAGILIS_DEFAULT_DATA_DIR
#define FRAGILIS_DEFAULT_DATA_DIR "data"
#endif

namespace fragilis::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct Common {
  std::string out_dir = ".";
  std::vector<std::string> formats;

  bool wants(const std::string& f) const {
    if (formats.empty()) return f == "json" || f == "csv";
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
};

class Context {
 public:
  Context(const Common& common, std::string command, std::vector<std::string> command_line)
      : common_(common), command_(std::move(command)) {
    manifest_.command_line = std::move(command_line);
    manifest_.timestamp = utc_timestamp();
  }

  void input(const std::string& path) { manifest_.inputs.push_back({path, sha256_file(path)}); }
  void seed(std::uint64_t s) { manifest_.seed = s; }

  void write_json(const std::string& name, const json& j) { write(name, io::dump(j)); }

  // CSV is written when requested; SVG views are rendered from the same text.
  void write_table(const std::string& stem, const std::string& csv, const std::string& title) {
    if (common_.wants("csv")) write(stem + ".csv", csv);
    if (common_.wants("svg")) write(stem + ".svg", line_chart_svg(csv, title));
  }

  void finish() { write(command_ + ".manifest.json", io::dump(to_json(manifest_))); }

 private:
  void write(const std::string& name, const std::string& text) {
    fs::create_directories(common_.out_dir);
    io::write_text_file((fs::path(common_.out_dir) / name).string(), text);
  }

  const Common& common_;
  std::string command_;
  RunManifest manifest_;
};

refclass::Metric metric_of(const std::string& s) {
  const auto m = refclass::parse_metric(s);
  if (!m) throw ParseError("unknown metric '" + s + "' (expected cost|schedule)", 0, "--metric");
  return *m;
}

std::string resolve_asset(const std::string& name_or_file) {
  if (fs::exists(name_or_file)) return name_or_file;
  const auto candidate = fs::path(data_dir()) / (name_or_file + ".json");
  if (fs::exists(candidate)) return candidate.string();
  throw ParseError("no distribution file or bundled asset named '" + name_or_file + "'", 0, "--dist");
}

stress::Uncertain load_uncertain(Context& ctx, const std::string& name_or_file) {
  const auto path = resolve_asset(name_or_file);
  ctx.input(path);
  return io::distribution_from_json(io::read_json_file(path));
}

refclass::ReferenceClass load_records(Context& ctx, const std::string& path, bool strict,
                                      refclass::IngestReport* report_out = nullptr) {
  ctx.input(path);
  auto report = refclass::read_csv_file(path, {strict, path});
  auto records = report.records;
  if (report_out) *report_out = std::move(report);
  return records;
}

cashflow::AppraisalModel load_model(Context& ctx, const std::string& path) {
  ctx.input(path);
  return io::model_from_json(io::read_json_file(path));
}

std::string payoff_csv(const cashflow::PayoffCurve& c) {
  std::string out = "position,cum_gain_minus_cum_pain\n";
  const std::size_t len = std::max(c.cum_gain.size(), c.cum_pain.size());
  auto at = [](const std::vector<double>& v, std::size_t i) {
    return v.empty() ? 0.0 : (i < v.size() ? v[i] : v.back());
  };
  for (std::size_t i = 0; i < len; ++i)
    out += std::to_string(i) + "," + io::format_number(at(c.cum_gain, i) - at(c.cum_pain, i)) + "\n";
  return out;
}

// Reads a JSON artifact from the output directory if it exists.
std::optional<json> artifact(const std::string& dir, const std::string& name) {
  const auto path = fs::path(dir) / name;
  if (!fs::exists(path)) return std::nullopt;
  return io::read_json_file(path.string());
}

// Values in the report are the JSON tokens of the artifacts, verbatim.
std::string token(const json& j) { return j.dump(); }

std::string build_report(const std::string& dir, std::vector<std::string>& used) {
  std::ostringstream md;
  md << "# Fragility report\n\n";
  if (auto a = artifact(dir, "appraisal.json")) {
    used.push_back("appraisal.json");
    const auto& r = (*a)["result"];
    md << "## Appraisal\n\n"
       << "| quantity | value |\n|---|---|\n"
       << "| NPV | " << token(r["npv"]) << " |\n"
       << "| BCR | " << token(r["bcr"]) << " |\n"
       << "| IRR | " << token(r["irr"]) << " |\n"
       << "| break-even capex overrun | " << token(r["break_even_overrun"]) << " |\n"
       << "| break-even delay (years) | " << token(r["break_even_delay"]) << " |\n\n";
  }
  if (auto s = artifact(dir, "stress.json")) {
    used.push_back("stress.json");
    const auto& r = (*s)["result"];
    md << "## Stress test\n\n"
       << "Trials: " << token(r["n_trials"]) << ", seed: " << token(r["seed"]) << "\n\n"
       << "| quantity | value |\n|---|---|\n"
       << "| P(BCR < 1) | " << token(r["p_break"]) << " |\n"
       << "| standard error | " << token(r["p_break_se"]) << " |\n"
       << "| mean NPV | " << token(r["mean_npv"]) << " |\n";
    if (s->contains("p_break_analytic")) md << "| analytic P(break) | " << token((*s)["p_break_analytic"]) << " |\n";
    for (const auto& q : r["npv_quantiles"]) md << "| NPV P" << token(q["p"]) << " | " << token(q["npv"]) << " |\n";
    md << "\n";
  }
  if (auto c = artifact(dir, "contingency.json")) {
    used.push_back("contingency.json");
    const auto& r = (*c)["result"];
    md << "## Contingency\n\n"
       << "Coverage " << token((*c)["coverage"]) << ": contingency " << token(r["contingency"])
       << ", adjusted BCR " << token(r["adjusted_bcr"]) << ", decision " << r["decision"].get<std::string>()
       << "\n\n";
  }
  if (auto st = artifact(dir, "stats.json")) {
    used.push_back("stats.json");
    const auto& s = (*st)["summary"];
    md << "## Reference class (" << (*st)["metric"].get<std::string>() << ")\n\n"
       << "| quantity | value |\n|---|---|\n"
       << "| n | " << token(s["n"]) << " |\n"
       << "| mean | " << token(s["mean"]) << " |\n"
       << "| median | " << token(s["median"]) << " |\n"
       << "| IQR | " << token(s["iqr"]) << " |\n"
       << "| share > 1 | " << token(s["share_over_1"]) << " |\n";
    for (const auto& b : s["share_breaking"])
      md << "| share >= " << token(b["threshold"]) << " | " << token(b["share"]) << " |\n";
    md << "\n";
  }
  if (auto g = artifact(dir, "grid.json")) {
    used.push_back("grid.json");
    const auto& grid = (*g)["grid"];
    md << "## Sensitivity grid (IRR / BCR; rows = cost multiplier, columns = benefit multiplier)\n\n| cost \\ benefit |";
    for (const auto& b : grid["benefit_mults"]) md << ' ' << token(b) << " |";
    md << "\n|---|";
    for (std::size_t j = 0; j < grid["benefit_mults"].size(); ++j) md << "---|";
    md << "\n";
    for (std::size_t i = 0; i < grid["cost_mults"].size(); ++i) {
      md << "| " << token(grid["cost_mults"][i]) << " |";
      for (const auto& cell : grid["cells"][i]) md << ' ' << token(cell["irr"]) << " / " << token(cell["bcr"]) << " |";
      md << "\n";
    }
    md << "\n";
  }
  if (auto t = artifact(dir, "test.json")) {
    used.push_back("test.json");
    const auto& r = (*t)["result"];
    md << "## Hypothesis test (" << (*t)["kind"].get<std::string>() << ")\n\n"
       << "statistic " << token(r["statistic"]) << ", p " << token(r["p_value"]) << ", method "
       << r["method"].get<std::string>() << "\n\n";
  }
  if (auto d = artifact(dir, "density.json")) {
    used.push_back("density.json");
    md << "## Density trace\n\nbandwidth " << token((*d)["bandwidth"]) << ", median " << token((*d)["median"])
       << ", mean " << token((*d)["mean"]) << "\n\n";
  }
  if (used.empty()) throw ParseError("no result artifacts found in '" + dir + "'");
  return md.str();
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--format", common.formats, "Output formats (json, csv, svg); repeatable")
      ->check(CLI::IsMember({"json", "csv", "svg"}));
}

}  // namespace

std::string data_dir() {
  if (const char* env = std::getenv("FRAGILIS_DATA_DIR"); env && *env) return env;
  return FRAGILIS_DEFAULT_DATA_DIR;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Investment fragility analysis: appraisal, reference classes, stress tests"};
  app.name(args.empty() ? "fragilis" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  std::string input;
  bool strict = false;
  std::string metric = "cost";
  std::vector<double> thresholds;
  std::vector<double> extra_quantiles;
  std::string group;
  std::optional<double> bandwidth;
  std::string test_kind = "bias";
  double shortfall = 0.0;
  std::string dist = "big-dam";
  std::string schedule_dist;
  double duration = 0.0;
  std::string shortfall_dist;
  std::uint64_t trials = 100000;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string config_file;
  std::vector<double> benefit_mults{0.85, 1.0, 1.15};
  std::vector<double> cost_mults{1.0, 1.15};
  double coverage = 0.8;
  std::string in_dir;
  double threshold_cutoff = 1.0;
  double recover_cutoff = 0.5;

  auto* ingest = app.add_subcommand("ingest", "Validate a project-record CSV and normalize it");
  ingest->add_option("records", input, "Records CSV")->required();
  ingest->add_flag("--strict", strict, "Abort on the first malformed row");
  add_common(ingest, common);

  auto* stats_cmd = app.add_subcommand("stats", "Summary statistics of overrun or slippage ratios");
  stats_cmd->add_option("records", input, "Records CSV")->required();
  stats_cmd->add_option("--metric", metric, "cost|schedule")->capture_default_str();
  stats_cmd->add_option("--threshold", thresholds, "Breaking threshold tau; repeatable");
  stats_cmd->add_option("--quantile", extra_quantiles, "Extra quantile p; repeatable");
  stats_cmd->add_option("--group", group, "region|type|decade");
  stats_cmd->add_flag("--strict", strict, "Abort on the first malformed row");
  add_common(stats_cmd, common);

  auto* density = app.add_subcommand("density", "Gaussian kernel density trace of ratios");
  density->add_option("records", input, "Records CSV")->required();
  density->add_option("--metric", metric, "cost|schedule")->capture_default_str();
  density->add_option("--bandwidth", bandwidth, "Kernel bandwidth (default: Silverman)");
  density->add_flag("--strict", strict, "Abort on the first malformed row");
  add_common(density, common);

  auto* test = app.add_subcommand("test", "Hypothesis tests on a reference class");
  test->add_option("records", input, "Records CSV")->required();
  test->add_option("--metric", metric, "cost|schedule")->capture_default_str();
  test->add_option("--kind", test_kind,
                   "bias: Mann-Whitney of overrun vs underrun magnitudes; decade: one-way F across "
                   "decades; trend: F test of slope over decision year")
      ->check(CLI::IsMember({"bias", "decade", "trend"}))
      ->capture_default_str();
  test->add_flag("--strict", strict, "Abort on the first malformed row");
  add_common(test, common);

  auto* appraise = app.add_subcommand("appraise", "NPV, BCR, IRR and break-even thresholds");
  appraise->add_option("model", input, "Appraisal model JSON")->required();
  appraise->add_option("--shortfall", shortfall, "Benefit shortfall fraction for the overrun threshold");
  add_common(appraise, common);

  auto* stress_cmd = app.add_subcommand("stress", "Monte Carlo stress test of an appraisal");
  stress_cmd->add_option("model", input, "Appraisal model JSON")->required();
  stress_cmd->add_option("--dist", dist, "Capex overrun distribution: bundled name or JSON file")
      ->capture_default_str();
  stress_cmd->add_option("--schedule-dist", schedule_dist, "Schedule slippage distribution");
  stress_cmd->add_option("--duration", duration, "Estimated build duration in years (with --schedule-dist)");
  stress_cmd->add_option("--shortfall", shortfall, "Fixed benefit shortfall fraction");
  stress_cmd->add_option("--shortfall-dist", shortfall_dist, "Benefit shortfall distribution on (0, 1)");
  stress_cmd->add_option("--trials", trials, "Number of trials")->capture_default_str();
  stress_cmd->add_option("--seed", seed, "Random seed (generated and recorded if absent)");
  stress_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  stress_cmd->add_option("--config", config_file, "StressConfig JSON (overrides distribution flags)");
  add_common(stress_cmd, common);

  auto* grid = app.add_subcommand("grid", "Sensitivity grid of IRR and BCR");
  grid->add_option("model", input, "Appraisal model JSON")->required();
  grid->add_option("--benefit-mult", benefit_mults, "Benefit multipliers (columns)")->delimiter(',');
  grid->add_option("--cost-mult", cost_mults, "Cost multipliers (rows)")->delimiter(',');
  add_common(grid, common);

  auto* contingency = app.add_subcommand("contingency", "Size a capex contingency at a coverage quantile");
  contingency->add_option("model", input, "Appraisal model JSON")->required();
  contingency->add_option("--dist", dist, "Capex overrun distribution")->capture_default_str();
  contingency->add_option("--coverage", coverage, "Coverage probability")->capture_default_str();
  add_common(contingency, common);

  auto* fragility = app.add_subcommand("fragility", "Quadrants and composed threshold of a system graph");
  fragility->add_option("graph", input, "System graph JSON")->required();
  fragility->add_option("--threshold-cutoff", threshold_cutoff, "High/low threshold cutoff")->capture_default_str();
  fragility->add_option("--recoverability-cutoff", recover_cutoff, "High/low recoverability cutoff")
      ->capture_default_str();
  add_common(fragility, common);

  auto* report = app.add_subcommand("report", "Markdown summary of the JSON artifacts in a directory");
  report->add_option("--in", in_dir, "Directory holding artifacts (default: --out)");
  add_common(report, common);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    Context ctx(common, app.get_subcommands().front()->get_name(), args);
    if (ingest->parsed()) {
      refclass::IngestReport rep;
      const auto cls = load_records(ctx, input, strict, &rep);
      ctx.write_json("records.json", io::to_json(cls));
      ctx.write_json("ingest.json", {{"rows_read", rep.rows_read},
                                     {"rows_accepted", cls.size()},
                                     {"rows_skipped", rep.rows_skipped},
                                     {"diagnostics", rep.diagnostics}});
      if (common.wants("csv")) {
        std::ostringstream csv;
        refclass::write_csv(csv, cls);
        io::write_text_file((fs::path(common.out_dir) / "records.csv").string(), csv.str());
      }
      for (const auto& d : rep.diagnostics) err << "skipped: " << d << "\n";
      out << "ingested " << cls.size() << " records (" << rep.rows_skipped << " skipped)\n";
    } else if (stats_cmd->parsed()) {
      const auto m = metric_of(metric);
      const auto cls = load_records(ctx, input, strict);
      json j{{"metric", metric},
             {"n_records", cls.size()},
             {"summary", io::to_json(refclass::summarize(cls, m, thresholds, extra_quantiles))}};
      if (!group.empty()) {
        const auto key = refclass::parse_group_key(group);
        if (!key) throw ParseError("unknown group key '" + group + "' (expected region|type|decade)", 0, "--group");
        json groups = json::object();
        for (const auto& [label, s] : refclass::group_stats(cls, m, *key, thresholds)) groups[label] = io::to_json(s);
        j["group_by"] = group;
        j["groups"] = groups;
      }
      ctx.write_json("stats.json", j);
      out << io::dump(j);
    } else if (density->parsed()) {
      const auto m = metric_of(metric);
      const auto values = refclass::metric_values(load_records(ctx, input, strict), m);
      const auto trace = stats::kde(values, bandwidth);
      const auto s = refclass::summarize_values(values, {});
      ctx.write_json("density.json", {{"metric", metric},
                                      {"n", values.size()},
                                      {"bandwidth", trace.bandwidth},
                                      {"median", s.median},
                                      {"mean", s.mean},
                                      {"grid_size", trace.grid.size()}});
      ctx.write_table("density", io::density_csv(trace), "Density trace of " + metric + " ratio");
      out << "bandwidth " << io::format_number(trace.bandwidth) << "\n";
    } else if (test->parsed()) {
      const auto m = metric_of(metric);
      const auto cls = load_records(ctx, input, strict);
      json result;
      if (test_kind == "bias") {
        std::vector<double> over;
        std::vector<double> under;
        for (const auto& r : cls.records()) {
          const double v = refclass::metric_value(r, m);
          if (v > 1.0) over.push_back(v - 1.0);
          if (v < 1.0) under.push_back(1.0 - v);
        }
        if (over.empty() || under.empty())
          throw ComputationError("bias test needs both overruns and underruns in the class");
        result = io::to_json(stats::mann_whitney_u(over, under));
      } else if (test_kind == "decade") {
        std::map<std::string, std::vector<double>> by_decade;
        for (const auto& r : cls.records())
          by_decade[refclass::group_label(r, refclass::GroupKey::Decade)].push_back(refclass::metric_value(r, m));
        std::vector<std::vector<double>> groups;
        for (auto& [_, g] : by_decade) groups.push_back(std::move(g));
        result = io::to_json(stats::one_way_f(groups));
      } else {
        std::vector<double> x;
        std::vector<double> y;
        for (const auto& r : cls.records()) {
          x.push_back(r.decision_year);
          y.push_back(refclass::metric_value(r, m));
        }
        result = io::to_json(stats::trend_f(x, y));
      }
      const json j{{"kind", test_kind}, {"metric", metric}, {"result", result}};
      ctx.write_json("test.json", j);
      out << io::dump(j);
    } else if (appraise->parsed()) {
      const auto model = load_model(ctx, input);
      const auto result = cashflow::appraise(model, shortfall);
      const auto curve = cashflow::payoff_curve(model);
      const json j{{"model", io::to_json(model)},
                   {"shortfall", shortfall},
                   {"result", io::to_json(result)},
                   {"payoff_curve", io::to_json(curve)}};
      ctx.write_json("appraisal.json", j);
      ctx.write_table("payoff", payoff_csv(curve), "Cumulative discounted gain minus pain");
      out << io::dump(j["result"]);
    } else if (stress_cmd->parsed()) {
      const auto model = load_model(ctx, input);
      stress::StressConfig config;
      if (!config_file.empty()) {
        ctx.input(config_file);
        const auto cfg = io::read_json_file(config_file);
        config = io::stress_config_from_json(cfg);
        if (stress_cmd->count("--trials")) config.n_trials = trials;
        if (!seed && cfg.contains("seed")) seed = config.seed;
      } else {
        config.n_trials = trials;
        config.capex = load_uncertain(ctx, dist);
        if (!schedule_dist.empty()) {
          config.schedule = load_uncertain(ctx, schedule_dist);
          config.est_duration_years = duration;
        }
        if (!shortfall_dist.empty())
          config.shortfall = load_uncertain(ctx, shortfall_dist);
        else
          config.shortfall = stress::Fixed{shortfall};
      }
      if (!seed) seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) | std::random_device{}();
      config.seed = *seed;
      if (config.n_trials == 0) throw ParseError("must be >= 1", 0, "--trials");
      ctx.seed(config.seed);
      const auto result = stress::run_stress(model, config, threads);
      json j{{"config", io::to_json(config)}, {"result", io::to_json(result)}};
      const auto* fixed_s = std::get_if<stress::Fixed>(&config.shortfall);
      const auto* capex_dist = std::get_if<stress::QuantileDistribution>(&config.capex);
      if (!config.schedule && fixed_s && capex_dist) {
        const auto k = cashflow::break_even_overrun(model, fixed_s->value);
        j["break_even_overrun"] = k.multiplier;
        j["p_break_analytic"] = k.multiplier > 0.0 ? stress::p_break_analytic(*capex_dist, k.multiplier) : 1.0;
      }
      ctx.write_json("stress.json", j);
      ctx.write_table("npv_quantiles", io::npv_quantiles_csv(result), "NPV quantiles");
      out << io::dump(j["result"]);
    } else if (grid->parsed()) {
      const auto model = load_model(ctx, input);
      const auto g = stress::sensitivity_grid(model, benefit_mults, cost_mults);
      const json j{{"orientation", "rows = cost multipliers, columns = benefit multipliers"},
                   {"grid", io::to_json(g)}};
      ctx.write_json("grid.json", j);
      if (common.wants("csv"))
        io::write_text_file((fs::path(common.out_dir) / "grid.csv").string(), io::grid_csv(g));
      out << io::dump(j);
    } else if (contingency->parsed()) {
      const auto model = load_model(ctx, input);
      const auto capex = load_uncertain(ctx, dist);
      const auto c = stress::size_contingency(model, capex, coverage);
      const json j{{"coverage", coverage}, {"base_bcr", cashflow::bcr(model)}, {"result", io::to_json(c)}};
      ctx.write_json("contingency.json", j);
      out << io::dump(j);
    } else if (fragility->parsed()) {
      ctx.input(input);
      const auto graph = io::system_graph_from_json(io::read_json_file(input));
      const systems::QuadrantCutoffs cutoffs{threshold_cutoff, recover_cutoff};
      json quadrants = json::object();
      for (const auto& [id, p] : graph.components()) {
        const auto q = systems::classify_quadrant(p, cutoffs);
        quadrants[id] = {{"quadrant", systems::to_string(q)}, {"archetype", systems::archetype(q)}};
      }
      const json j{
          {"system_threshold", systems::system_threshold(graph)},
          {"uses_redundancy", graph.uses_redundancy()},
          {"quadrants", quadrants},
          {"conventions",
           {{"series", "system threshold is the minimum over children (weakest component)"},
            {"redundant", "maximum over children; an extension beyond weakest-link composition"},
            {"cutoff", "a value equal to its cutoff is classified high"},
            {"cutoffs", {{"threshold", threshold_cutoff}, {"recoverability", recover_cutoff}}}}}};
      ctx.write_json("fragility.json", j);
      out << io::dump(j);
    } else if (report->parsed()) {
      const std::string dir = in_dir.empty() ? common.out_dir : in_dir;
      std::vector<std::string> used;
      const auto md = build_report(dir, used);
      for (const auto& name : used) ctx.input((fs::path(dir) / name).string());
      fs::create_directories(common.out_dir);
      io::write_text_file((fs::path(common.out_dir) / "report.md").string(), md);
      out << md;
    }
    ctx.finish();
    return kOk;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const ComputationError& e) {
    err << "error: " << e.what() << "\n";
    return kComputationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kComputationError;
  }
}

}  // namespace fragilis::cli
