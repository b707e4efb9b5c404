#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "insample/harness.hpp"
#include "insample/text.hpp"

namespace insample {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 160.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 50.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double x) { return format_fixed(std::round(x * 100.0) / 100.0); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void cmd_plot(const std::vector<std::filesystem::path>& curves,
              const std::filesystem::path& out_svg) {
  if (curves.empty()) throw std::invalid_argument("plot: at least one curve file is required");
  std::vector<std::vector<CurvePoint>> data;
  for (const auto& path : curves) data.push_back(read_curve_csv(path));

  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = std::numeric_limits<double>::lowest();
  for (const auto& c : data) {
    for (const auto& p : c) {
      x_max = std::max(x_max, static_cast<double>(p.update));
      y_min = std::min(y_min, p.rollout_return_mean);
      y_max = std::max(y_max, p.rollout_return_mean);
    }
  }
  if (y_max <= y_min) y_max = y_min + 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + plot_w * x / x_max; };
  auto py = [&](double y) { return kTop + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" +
         num(kLeft + plot_w) + "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_max * i / 4.0;
    const double yv = y_min + (y_max - y_min) * i / 4.0;
    svg += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(kTop + plot_h + 16) +
           "\" text-anchor=\"middle\">" + format_real(std::round(xv)) + "</text>\n";
    svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(yv) + 4) +
           "\" text-anchor=\"end\">" + num(yv) + "</text>\n";
  }
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\">updates</text>\n";
  svg += "<text transform=\"translate(16," + num(kTop + plot_h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">return per episode</text>\n";

  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string color = kColors[i % std::size(kColors)];
    std::string points;
    for (const auto& p : data[i]) {
      if (!points.empty()) points += ' ';
      points += num(px(static_cast<double>(p.update))) + "," + num(py(p.rollout_return_mean));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(i);
    const double lx = kLeft + plot_w + 12.0;
    svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 20) +
           "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly) + "\">" +
           escape(curves[i].stem().string()) + "</text>\n";
  }
  svg += "</svg>\n";

  std::ofstream out(out_svg, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + out_svg.string() + " for writing");
  out << svg;
}

}  // namespace insample
