#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualsim/core.hpp"
#include "dualsim/error.hpp"
#include "dualsim/experiments.hpp"
#include "dualsim/stats.hpp"

namespace dualsim {

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

// "t,<species...>" header then one row per sample. Rows are joined by '\n'
// with no trailing newline.
inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  for (const auto& s : traj.species) out += "," + s;
  for (std::size_t k = 0; k < traj.num_samples(); ++k) {
    out += "\n" + format_number(traj.times[k]);
    for (const auto& col : traj.columns) out += "," + format_number(col[k]);
  }
  return out;
}

inline std::string report_csv(const ComparisonReport& report) {
  std::string out = "species,U,p,decision";
  for (const auto& row : report.rows) {
    out += "\n" + row.species + "," + format_number(row.U) + "," + format_number(row.p) + "," +
           (row.reject ? "reject" : "fail to reject");
  }
  return out;
}

inline std::string census_csv(std::span<const CensusRow> rows) {
  std::string out = "predicate,count,total,frequency";
  for (const auto& r : rows) {
    out += "\n" + r.predicate + "," + std::to_string(r.count) + "," + std::to_string(r.total) + "," +
           format_number(r.frequency);
  }
  return out;
}

// which: "ode" | "abm-mean" | "abm-rep-<k>" (0-based) | "report" | "census"
inline std::string emit_csv(const ExperimentResult& result, std::string_view which) {
  if (which == "ode") return trajectory_csv(result.ode);
  if (which == "abm-mean") return trajectory_csv(result.abm.mean);
  if (which == "report") return report_csv(result.comparison);
  if (which == "census") return census_csv(result.census);
  constexpr std::string_view rep_prefix = "abm-rep-";
  if (which.substr(0, rep_prefix.size()) == rep_prefix) {
    const auto digits = which.substr(rep_prefix.size());
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty() &&
        k < result.abm.replications.size()) {
      return trajectory_csv(result.abm.replications[k]);
    }
  }
  throw SimError(ErrorCode::NoSuchSeries, std::string(which));
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Reads the numeric CSVs written by trajectory_csv.
inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (table.header.empty()) {
      for (auto c : cells) table.header.emplace_back(c);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw SyntaxError(line_no, "row has " + std::to_string(cells.size()) + " cells");
    }
    std::vector<double> row;
    for (auto c : cells) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size()) throw SyntaxError(line_no, "bad number '" + std::string(c) + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// Line chart of one species: ODE solid, ABM mean dashed, x axis in days.
// Either series may be null, not both.
inline std::string svg_plot(const Trajectory* ode, const Trajectory* abm_mean, std::string_view species) {
  if (!ode && !abm_mean) throw SimError(ErrorCode::NoSuchSeries, "nothing to plot");
  constexpr double W = 720, H = 420, L = 70, R = 20, T = 40, B = 50;
  const Trajectory& first = ode ? *ode : *abm_mean;
  double t0 = first.times.empty() ? 0.0 : first.times.front();
  double t1 = first.times.empty() ? 1.0 : first.times.back();
  double vmax = 0.0;
  for (const Trajectory* tr : {ode, abm_mean}) {
    if (!tr) continue;
    for (double v : tr->column(species)) vmax = std::max(vmax, v);
    if (!tr->times.empty()) t1 = std::max(t1, tr->times.back());
  }
  if (t1 <= t0) t1 = t0 + 1.0;
  if (vmax <= 0.0) vmax = 1.0;
  auto x = [&](double t) { return L + (t - t0) / (t1 - t0) * (W - L - R); };
  auto y = [&](double v) { return H - B - v / vmax * (H - T - B); };
  auto px = [](double v) { return format_number(std::round(v * 100) / 100); };
  auto polyline = [&](const Trajectory& tr, std::string_view style) {
    const auto col = tr.column(species);
    std::string pts;
    for (std::size_t k = 0; k < col.size(); ++k) {
      if (k) pts += ' ';
      pts += px(x(tr.times[k])) + "," + px(y(col[k]));
    }
    return "<polyline fill=\"none\" " + std::string(style) + " points=\"" + pts + "\"/>\n";
  };
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"420\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"360\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + std::string(species) + "</text>\n";
  svg += "<line x1=\"70\" y1=\"370\" x2=\"700\" y2=\"370\" stroke=\"black\"/>\n";
  svg += "<line x1=\"70\" y1=\"40\" x2=\"70\" y2=\"370\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = t0 + (t1 - t0) * i / 5.0;
    const double v = vmax * i / 5.0;
    char label[32];
    std::snprintf(label, sizeof(label), "%.4g", t);
    svg += "<text x=\"" + px(x(t)) + "\" y=\"388\" text-anchor=\"middle\">" + label + "</text>\n";
    std::snprintf(label, sizeof(label), "%.3g", v);
    svg += "<text x=\"64\" y=\"" + px(y(v) + 4) + "\" text-anchor=\"end\">" + label + "</text>\n";
  }
  svg += "<text x=\"385\" y=\"412\" text-anchor=\"middle\">days</text>\n";
  int legend_y = 56;
  if (ode) {
    svg += polyline(*ode, "stroke=\"#1f77b4\" stroke-width=\"2\"");
    svg += "<text x=\"600\" y=\"" + std::to_string(legend_y) + "\" fill=\"#1f77b4\">ODE</text>\n";
    legend_y += 16;
  }
  if (abm_mean) {
    svg += polyline(*abm_mean, "stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"");
    svg += "<text x=\"600\" y=\"" + std::to_string(legend_y) + "\" fill=\"#d62728\">ABM mean</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace dualsim
