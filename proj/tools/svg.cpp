#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "fragilis/error.hpp"

namespace fragilis::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// strtod rather than stod: density tails underflow to subnormals, which
// stod rejects as out of range.
double parse_cell(const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str()) throw Error("chart source CSV has a non-numeric cell: " + text);
  return v;
}

std::string label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string line_chart_svg(const std::string& csv, const std::string& title) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  const auto comma = line.find(',');
  const std::string x_name = line.substr(0, comma);
  const std::string y_name = comma == std::string::npos ? "" : line.substr(comma + 1);
  std::vector<std::pair<double, double>> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = line.find(',');
    if (c == std::string::npos) throw Error("chart source CSV needs two columns");
    points.emplace_back(parse_cell(line.substr(0, c)), parse_cell(line.substr(c + 1)));
  }
  if (points.empty()) throw Error("chart source CSV has no rows");

  auto [xmin_it, xmax_it] = std::minmax_element(points.begin(), points.end(),
                                                [](auto& a, auto& b) { return a.first < b.first; });
  auto [ymin_it, ymax_it] = std::minmax_element(points.begin(), points.end(),
                                                [](auto& a, auto& b) { return a.second < b.second; });
  double xmin = xmin_it->first, xmax = xmax_it->first;
  double ymin = std::min(0.0, ymin_it->second), ymax = ymax_it->second;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  auto sx = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin); };
  auto sy = [&](double y) { return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << escape(title) << "</text>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
      << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  const char* small = "font-family=\"sans-serif\" font-size=\"10\"";
  svg << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 14 << "\" " << small << ">"
      << label(xmin) << "</text>\n";
  svg << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 14
      << "\" text-anchor=\"end\" " << small << ">" << label(xmax) << "</text>\n";
  svg << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin << "\" text-anchor=\"end\" " << small << ">"
      << label(ymax) << "</text>\n";
  svg << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin << "\" text-anchor=\"end\" "
      << small << ">" << label(ymin) << "</text>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\" " << small
      << ">" << escape(x_name) << "</text>\n";
  svg << "<text x=\"14\" y=\"" << kHeight / 2 << "\" " << small << " transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\" text-anchor=\"middle\">" << escape(y_name) << "</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i)
    svg << (i ? " " : "") << fixed(sx(points[i].first)) << ',' << fixed(sy(points[i].second));
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

}  // namespace fragilis::cli
