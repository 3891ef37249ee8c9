#include "fftrack/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace fftrack::svg {

namespace {

constexpr double kWidth = 820;
constexpr double kPanelHeight = 280;
constexpr double kTop = 40;
constexpr double kLeft = 80, kRight = 30, kPadTop = 30, kPadBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(1e-3, 0.05 * std::abs(hi));
      lo -= pad;
      hi += pad;
    }
  }
};

// 1-2-5 tick spacing with roughly `target` intervals.
double tick_step(const Range& r, int target) {
  const double raw = (r.hi - r.lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(4) << (std::abs(v) < 1e-12 ? 0.0 : v);
  return ss.str();
}

void panel(std::ostream& os, const Panel& p, double y0) {
  const double w = kWidth - kLeft - kRight;
  const double h = kPanelHeight - kPadTop - kPadBottom;
  const double top = y0 + kPadTop;

  Range rx, ry;
  for (const auto& s : p.series) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(v);
  }
  rx.settle();
  ry.settle();
  if (p.equal_aspect) {
    // Grow the tighter axis so one unit has the same length on both.
    const double sx = (rx.hi - rx.lo) / w, sy = (ry.hi - ry.lo) / h;
    if (sx > sy) {
      const double c = 0.5 * (ry.lo + ry.hi), half = 0.5 * sx * h;
      ry.lo = c - half;
      ry.hi = c + half;
    } else {
      const double c = 0.5 * (rx.lo + rx.hi), half = 0.5 * sy * w;
      rx.lo = c - half;
      rx.hi = c + half;
    }
  }
  auto X = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * w; };
  auto Y = [&](double v) { return top + h - (v - ry.lo) / (ry.hi - ry.lo) * h; };

  os << "<text x='" << kLeft + w / 2 << "' y='" << top - 10
     << "' text-anchor='middle' font-size='14'>" << escape(p.title) << "</text>\n";
  os << "<rect x='" << kLeft << "' y='" << top << "' width='" << w << "' height='" << h
     << "' fill='none' stroke='#444'/>\n";

  const double xs = tick_step(rx, 8), ys = tick_step(ry, 5);
  for (double t = std::ceil(rx.lo / xs) * xs; t <= rx.hi + 1e-9 * xs; t += xs) {
    os << "<line x1='" << X(t) << "' y1='" << top << "' x2='" << X(t) << "' y2='" << top + h
       << "' stroke='#ddd'/>\n<text x='" << X(t) << "' y='" << top + h + 16
       << "' text-anchor='middle' font-size='11'>" << fmt(t) << "</text>\n";
  }
  for (double t = std::ceil(ry.lo / ys) * ys; t <= ry.hi + 1e-9 * ys; t += ys) {
    os << "<line x1='" << kLeft << "' y1='" << Y(t) << "' x2='" << kLeft + w << "' y2='" << Y(t)
       << "' stroke='#ddd'/>\n<text x='" << kLeft - 6 << "' y='" << Y(t) + 4
       << "' text-anchor='end' font-size='11'>" << fmt(t) << "</text>\n";
  }
  os << "<text x='" << kLeft + w / 2 << "' y='" << top + h + 36
     << "' text-anchor='middle' font-size='12'>" << escape(p.xlabel) << "</text>\n";
  os << "<text transform='translate(" << kLeft - 55 << ',' << top + h / 2
     << ") rotate(-90)' text-anchor='middle' font-size='12'>" << escape(p.ylabel) << "</text>\n";

  for (std::size_t i = 0; i < p.series.size(); ++i) {
    const Series& s = p.series[i];
    const char* color = kColors[i % std::size(kColors)];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5'"
       << (s.dashed ? " stroke-dasharray='6,4'" : "") << " points='";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      os << X(s.x[k]) << ',' << Y(s.y[k]) << ' ';
    }
    os << "'/>\n";
    const double ly = top + 14 + 16 * i;
    os << "<line x1='" << kLeft + w - 150 << "' y1='" << ly - 4 << "' x2='" << kLeft + w - 125
       << "' y2='" << ly - 4 << "' stroke='" << color << "' stroke-width='2'"
       << (s.dashed ? " stroke-dasharray='6,4'" : "") << "/>\n<text x='" << kLeft + w - 120
       << "' y='" << ly << "' font-size='11'>" << escape(s.label) << "</text>\n";
  }
}

}  // namespace

void write(std::ostream& os, const std::string& title, const std::vector<Panel>& panels) {
  const double height = kTop + kPanelHeight * static_cast<double>(panels.size());
  os << std::setprecision(6);
  os << "<?xml version='1.0' encoding='UTF-8'?>\n"
     << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << height
     << "' font-family='sans-serif'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-size='16'>"
     << escape(title) << "</text>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) panel(os, panels[i], kTop + kPanelHeight * i);
  os << "</svg>\n";
}

}  // namespace fftrack::svg
