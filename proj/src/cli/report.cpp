#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <sstream>

#include "fids/cli/commands.hpp"
#include "fids/error.hpp"

namespace fids::cli {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_metric(const std::string& text, std::size_t line_no, const char* name) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw DataError(fmt::format("rounds.csv line {}: bad {} value '{}'", line_no, name, text));
  }
  return v;
}

}  // namespace

std::vector<RoundsRow> parse_rounds_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("rounds.csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRoundsHeader) throw DataError("rounds.csv has an unexpected header");
  std::vector<RoundsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 7) throw DataError(fmt::format("rounds.csv line {}: expected 7 fields", line_no));
    RoundsRow row;
    row.device = f[0];
    int round = 0;
    const auto res = std::from_chars(f[1].data(), f[1].data() + f[1].size(), round);
    if (f[1].empty() || res.ec != std::errc() || res.ptr != f[1].data() + f[1].size() || round < 1) {
      throw DataError(fmt::format("rounds.csv line {}: bad round '{}'", line_no, f[1]));
    }
    row.round = round;
    row.accuracy = parse_metric(f[2], line_no, "accuracy");
    row.precision = parse_metric(f[3], line_no, "precision");
    row.recall = parse_metric(f[4], line_no, "recall");
    row.kappa = parse_metric(f[5], line_no, "kappa");
    row.stop_reason = f[6];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_svg(const std::vector<RoundsRow>& rows) {
  constexpr int kWidth = 800;
  constexpr int kHeight = 480;
  constexpr int kLeft = 60;
  constexpr int kTop = 40;
  constexpr int kPlotW = 600;
  constexpr int kPlotH = 360;
  const char* const names[] = {"accuracy", "precision", "recall", "kappa"};
  const char* const colors[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759"};

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      kWidth, kHeight);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  // Axis with gridlines at 0, 0.25, ..., 1.
  for (int t = 0; t <= 4; ++t) {
    const double y = kTop + kPlotH - kPlotH * t / 4.0;
    svg += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", kLeft, y,
                       kLeft + kPlotW, y);
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", kLeft - 6, y + 4, t / 4.0);
  }
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                     kTop + kPlotH);

  const double group_w = rows.empty() ? 0.0 : static_cast<double>(kPlotW) / static_cast<double>(rows.size());
  const double bar_w = group_w * 0.8 / 4.0;
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const auto& r = rows[g];
    const double values[] = {r.accuracy, r.precision, r.recall, r.kappa};
    const double x0 = kLeft + group_w * static_cast<double>(g) + group_w * 0.1;
    for (int m = 0; m < 4; ++m) {
      const double v = std::clamp(values[m], 0.0, 1.0);
      const double h = v * kPlotH;
      const double x = x0 + bar_w * m;
      const double y = kTop + kPlotH - h;
      svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n", x, y,
                         bar_w, h, colors[m]);
      svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"9\">{:.2f}</text>\n",
                         x + bar_w / 2, y - 3, values[m]);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x0 + bar_w * 2,
                       kTop + kPlotH + 18, r.device);
  }
  for (int m = 0; m < 4; ++m) {
    const int y = kTop + 10 + m * 20;
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", kLeft + kPlotW + 20, y,
                       colors[m]);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kLeft + kPlotW + 38, y + 10, names[m]);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace fids::cli
