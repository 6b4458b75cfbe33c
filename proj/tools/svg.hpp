#pragma once

#include <string>

namespace fragilis::cli {

// Renders the first two numeric columns of a CSV (header row required) as
// a polyline chart. The chart is a pure view of the CSV text.
std::string line_chart_svg(const std::string& csv, const std::string& title);

}  // namespace fragilis::cli
