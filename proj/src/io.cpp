#include "fragilis/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fragilis/error.hpp"

namespace fragilis::io {

namespace {

const json& require(const json& j, const char* key, const std::string& context) {
  if (!j.is_object()) throw ParseError("expected a JSON object", 0, context);
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing field", 0, context.empty() ? key : context + "." + key);
  return *it;
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ParseError("expected a number", 0, field);
  return j.get<double>();
}

double number_at(const json& j, const char* key, const std::string& context) {
  return number(require(j, key, context), context.empty() ? key : context + "." + key);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

cashflow::CashFlowStream stream_from_json(const json& j, const std::string& field) {
  if (j.is_null()) return {};
  if (!j.is_array()) throw ParseError("expected an array of {t, amount}", 0, field);
  std::vector<cashflow::CashFlow> entries;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto ctx = field + "[" + std::to_string(i) + "]";
    entries.push_back({number_at(j[i], "t", ctx), number_at(j[i], "amount", ctx)});
  }
  try {
    return cashflow::CashFlowStream(std::move(entries));
  } catch (const DomainError& e) {
    throw ParseError(e.what(), 0, field);
  }
}

json stream_to_json(const cashflow::CashFlowStream& s) {
  json out = json::array();
  for (const auto& cf : s.entries()) out.push_back({{"t", cf.t}, {"amount", cf.amount}});
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::shared_ptr<const systems::SystemNode> node_from_json(const json& j, const std::string& ctx) {
  auto node = std::make_shared<systems::SystemNode>();
  const auto& kind = require(j, "kind", ctx);
  if (kind == "series")
    node->kind = systems::NodeKind::Series;
  else if (kind == "redundant")
    node->kind = systems::NodeKind::Redundant;
  else
    throw ParseError("node kind must be 'series' or 'redundant'", 0, ctx + ".kind");
  const auto& children = require(j, "children", ctx);
  if (!children.is_array()) throw ParseError("expected an array", 0, ctx + ".children");
  for (std::size_t i = 0; i < children.size(); ++i) {
    const auto child_ctx = ctx + ".children[" + std::to_string(i) + "]";
    if (children[i].is_string())
      node->children.emplace_back(children[i].get<std::string>());
    else
      node->children.emplace_back(node_from_json(children[i], child_ctx));
  }
  return node;
}

json node_to_json(const systems::SystemNode& node) {
  json children = json::array();
  for (const auto& child : node.children) {
    if (const auto* id = std::get_if<std::string>(&child))
      children.push_back(*id);
    else
      children.push_back(node_to_json(*std::get<std::shared_ptr<const systems::SystemNode>>(child)));
  }
  return {{"kind", node.kind == systems::NodeKind::Series ? "series" : "redundant"},
          {"children", children}};
}

}  // namespace

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in '") + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json to_json(const cashflow::AppraisalModel& model) {
  return {{"discount_rate", model.discount_rate()},
          {"base_year", model.base_year()},
          {"capex", stream_to_json(model.capex())},
          {"om", stream_to_json(model.om())},
          {"benefits", stream_to_json(model.benefits())}};
}

cashflow::AppraisalModel model_from_json(const json& j) {
  const double rate = number_at(j, "discount_rate", "");
  int base_year = 0;
  if (j.contains("base_year")) {
    if (!j["base_year"].is_number_integer()) throw ParseError("expected an integer", 0, "base_year");
    base_year = j["base_year"].get<int>();
  }
  auto capex = stream_from_json(require(j, "capex", ""), "capex");
  auto om = stream_from_json(j.value("om", json(nullptr)), "om");
  auto benefits = stream_from_json(require(j, "benefits", ""), "benefits");
  try {
    return cashflow::AppraisalModel(std::move(capex), std::move(om), std::move(benefits), rate, base_year);
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

json to_json(const cashflow::PayoffCurve& curve) {
  return {{"gains_desc", curve.gains_desc},
          {"pains_desc", curve.pains_desc},
          {"cum_gain", curve.cum_gain},
          {"cum_pain", curve.cum_pain},
          {"fragility_index", curve.fragility_index ? json(*curve.fragility_index) : json(nullptr)}};
}

json to_json(const cashflow::AppraisalResult& r) {
  return {{"npv", r.npv},
          {"bcr", r.bcr},
          {"irr", optional_number(r.irr)},
          {"break_even_overrun", r.break_even_overrun.multiplier},
          {"broken_regardless_of_capex", r.break_even_overrun.broken_regardless},
          {"break_even_delay", optional_number(r.break_even_delay.years)},
          {"already_at_threshold", r.break_even_delay.already_broken}};
}

json to_json(const stress::QuantileDistribution& dist) {
  json anchors = json::array();
  for (const auto& a : dist.anchors()) anchors.push_back({{"p", a.p}, {"x", a.x}});
  json tail;
  if (dist.mean_target())
    tail = {{"calibrate_mean", *dist.mean_target()}};
  else
    tail = {{"xi", dist.tail().xi}, {"sigma", dist.tail().sigma}};
  return {{"anchors", anchors},
          {"floor_x", dist.floor_x()},
          {"tail", tail},
          {"resolved_tail", {{"xi", dist.tail().xi}, {"sigma", dist.tail().sigma}}},
          {"mean", finite_or_null(dist.mean())}};
}

stress::QuantileDistribution distribution_from_json(const json& j) {
  const auto& anchors_json = require(j, "anchors", "");
  if (!anchors_json.is_array()) throw ParseError("expected an array of {p, x}", 0, "anchors");
  std::vector<stress::QuantileAnchor> anchors;
  for (std::size_t i = 0; i < anchors_json.size(); ++i) {
    const auto ctx = "anchors[" + std::to_string(i) + "]";
    anchors.push_back({number_at(anchors_json[i], "p", ctx), number_at(anchors_json[i], "x", ctx)});
  }
  const double floor_x = j.contains("floor_x") ? number_at(j, "floor_x", "") : stress::kDefaultFloor;
  const auto& tail = require(j, "tail", "");
  stress::TailSpec spec;
  if (tail.contains("calibrate_mean"))
    spec = stress::CalibrateMean{number_at(tail, "calibrate_mean", "tail")};
  else
    spec = stress::GpdTail{number_at(tail, "xi", "tail"), number_at(tail, "sigma", "tail")};
  try {
    return stress::QuantileDistribution::build(std::move(anchors), floor_x, spec);
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

stress::Uncertain uncertain_from_json(const json& j) {
  if (j.is_number()) return stress::Fixed{j.get<double>()};
  return distribution_from_json(j);
}

json to_json(const stress::Uncertain& u) {
  if (const auto* f = std::get_if<stress::Fixed>(&u)) return f->value;
  return to_json(std::get<stress::QuantileDistribution>(u));
}

json to_json(const stress::StressConfig& c) {
  return {{"n_trials", c.n_trials},
          {"seed", c.seed},
          {"capex", to_json(c.capex)},
          {"schedule", c.schedule ? to_json(*c.schedule) : json(nullptr)},
          {"est_duration_years", c.est_duration_years},
          {"shortfall", to_json(c.shortfall)},
          {"npv_probs", c.npv_probs}};
}

stress::StressConfig stress_config_from_json(const json& j) {
  stress::StressConfig c;
  const auto& trials = require(j, "n_trials", "");
  if (!trials.is_number_unsigned() || trials.get<std::uint64_t>() == 0)
    throw ParseError("expected a positive integer", 0, "n_trials");
  c.n_trials = trials.get<std::uint64_t>();
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ParseError("expected an unsigned integer", 0, "seed");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.capex = uncertain_from_json(require(j, "capex", ""));
  if (j.contains("schedule") && !j["schedule"].is_null()) c.schedule = uncertain_from_json(j["schedule"]);
  if (j.contains("est_duration_years")) c.est_duration_years = number_at(j, "est_duration_years", "");
  if (j.contains("shortfall")) c.shortfall = uncertain_from_json(j["shortfall"]);
  if (j.contains("npv_probs")) c.npv_probs = j["npv_probs"].get<std::vector<double>>();
  return c;
}

json to_json(const stress::StressResult& r) {
  json q = json::array();
  for (const auto& [p, v] : r.npv_quantiles) q.push_back({{"p", p}, {"npv", v}});
  return {{"p_break", r.p_break}, {"p_break_se", r.p_break_se}, {"mean_npv", r.mean_npv},
          {"npv_quantiles", q},   {"n_trials", r.n_trials},     {"seed", r.seed}};
}

std::string npv_quantiles_csv(const stress::StressResult& r) {
  std::string out = "p,npv\n";
  for (const auto& [p, v] : r.npv_quantiles) out += format_number(p) + "," + format_number(v) + "\n";
  return out;
}

json to_json(const stress::SensitivityGrid& grid) {
  json rows = json::array();
  for (const auto& row : grid.cells) {
    json cells = json::array();
    for (const auto& c : row) cells.push_back({{"irr", optional_number(c.irr)}, {"bcr", c.bcr}});
    rows.push_back(cells);
  }
  return {{"benefit_mults", grid.benefit_mults}, {"cost_mults", grid.cost_mults}, {"cells", rows}};
}

std::string grid_csv(const stress::SensitivityGrid& grid) {
  std::string out = "cost_mult,benefit_mult,irr,bcr\n";
  for (std::size_t i = 0; i < grid.cost_mults.size(); ++i)
    for (std::size_t j = 0; j < grid.benefit_mults.size(); ++j) {
      const auto& c = grid.cells[i][j];
      out += format_number(grid.cost_mults[i]) + "," + format_number(grid.benefit_mults[j]) + "," +
             (c.irr ? format_number(*c.irr) : "") + "," + format_number(c.bcr) + "\n";
    }
  return out;
}

json to_json(const stress::Contingency& c) {
  return {{"contingency", c.contingency},
          {"adjusted_bcr", c.adjusted_bcr},
          {"decision", c.proceed ? "proceed" : "do-not-proceed"}};
}

json to_json(const refclass::ProjectRecord& r) {
  return {{"id", r.id},
          {"name", r.name},
          {"country", r.country},
          {"region", refclass::to_string(r.region)},
          {"project_type", r.project_type},
          {"decision_year", r.decision_year},
          {"est_cost", r.est_cost},
          {"act_cost", r.act_cost},
          {"est_months", r.est_months},
          {"act_months", r.act_months},
          {"est_benefit", optional_number(r.est_benefit)},
          {"act_benefit", optional_number(r.act_benefit)}};
}

json to_json(const refclass::ReferenceClass& cls) {
  json records = json::array();
  for (const auto& r : cls.records()) records.push_back(to_json(r));
  return {{"label", cls.label()}, {"records", records}};
}

json to_json(const refclass::SummaryStats& s) {
  json q = json::array();
  for (const auto& [p, v] : s.quantiles) q.push_back({{"p", p}, {"value", v}});
  json b = json::array();
  for (const auto& [tau, share] : s.share_breaking) b.push_back({{"threshold", tau}, {"share", share}});
  return {{"n", s.n},         {"mean", s.mean},     {"median", s.median},
          {"iqr", s.iqr},     {"quantiles", q},     {"share_over_1", s.share_over_1},
          {"share_breaking", b}};
}

json to_json(const stats::TestResult& r) {
  return {{"statistic", finite_or_null(r.statistic)},
          {"p_value", r.p_value},
          {"method", stats::to_string(r.method)},
          {"n", r.n},
          {"m", r.m}};
}

json to_json(const stats::TrendResult& r) {
  auto j = to_json(r.test);
  j["slope"] = r.slope;
  j["intercept"] = r.intercept;
  j["r_squared"] = r.r_squared;
  return j;
}

std::string density_csv(const stats::DensityTrace& trace) {
  std::string out = "value,density\n";
  for (std::size_t i = 0; i < trace.grid.size(); ++i)
    out += format_number(trace.grid[i]) + "," + format_number(trace.density[i]) + "\n";
  return out;
}

systems::SystemGraph system_graph_from_json(const json& j) {
  const auto& comps = require(j, "components", "");
  if (!comps.is_object()) throw ParseError("expected an object of id -> profile", 0, "components");
  std::map<std::string, systems::FragilityProfile> components;
  for (const auto& [id, p] : comps.items()) {
    const auto ctx = "components." + id;
    components[id] = {number_at(p, "threshold", ctx),
                      p.contains("recoverability") ? number_at(p, "recoverability", ctx) : 0.0};
  }
  const auto root = node_from_json(require(j, "root", ""), "root");
  try {
    return systems::SystemGraph(std::move(components), *root);
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

json to_json(const systems::SystemGraph& graph) {
  json comps = json::object();
  for (const auto& [id, p] : graph.components())
    comps[id] = {{"threshold", p.threshold}, {"recoverability", p.recoverability}};
  return {{"components", comps}, {"root", node_to_json(graph.root())}};
}

}  // namespace fragilis::io
