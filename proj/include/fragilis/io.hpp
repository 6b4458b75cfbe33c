#pragma once

// JSON and CSV forms of the library types. Field names here are the file
// formats the CLI reads and writes.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fragilis/cashflow.hpp"
#include "fragilis/refclass.hpp"
#include "fragilis/stats.hpp"
#include "fragilis/stress.hpp"
#include "fragilis/systems.hpp"

namespace fragilis::io {

using nlohmann::json;

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
// Two-space indented, trailing newline.
std::string dump(const json& j);

// {discount_rate, base_year, capex:[{t,amount}], om:[...], benefits:[...]}
json to_json(const cashflow::AppraisalModel& model);
cashflow::AppraisalModel model_from_json(const json& j);
json to_json(const cashflow::PayoffCurve& curve);
json to_json(const cashflow::AppraisalResult& result);

// {anchors:[{p,x}], floor_x, tail:{xi,sigma} | {calibrate_mean}}. Output
// also records the resolved tail and analytic mean.
json to_json(const stress::QuantileDistribution& dist);
stress::QuantileDistribution distribution_from_json(const json& j);
// A bare number is a Fixed value; an object is a distribution.
stress::Uncertain uncertain_from_json(const json& j);
json to_json(const stress::Uncertain& u);

json to_json(const stress::StressConfig& config);
stress::StressConfig stress_config_from_json(const json& j);
json to_json(const stress::StressResult& result);
std::string npv_quantiles_csv(const stress::StressResult& result);
json to_json(const stress::SensitivityGrid& grid);
std::string grid_csv(const stress::SensitivityGrid& grid);
json to_json(const stress::Contingency& c);

json to_json(const refclass::ProjectRecord& rec);
json to_json(const refclass::ReferenceClass& cls);
json to_json(const refclass::SummaryStats& s);

// {statistic, p_value, method, n, m}; a non-finite statistic is written as null.
json to_json(const stats::TestResult& r);
json to_json(const stats::TrendResult& r);
std::string density_csv(const stats::DensityTrace& trace);

// {components:{id:{threshold, recoverability}}, root:{kind, children:[id | node]}}
systems::SystemGraph system_graph_from_json(const json& j);
json to_json(const systems::SystemGraph& graph);

// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace fragilis::io
