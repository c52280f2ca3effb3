#include "sib/svg_plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace sib::plot {
namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Degenerate or empty ranges get a unit span so scaling stays finite.
  void settle() {
    if (!(lo <= hi)) lo = hi = 0.0;
    if (hi - lo < 1e-9) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  double span() const { return hi - lo; }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string color_for(std::size_t i, std::size_t n) {
  const int hue = n == 0 ? 0 : static_cast<int>(360.0 * static_cast<double>(i) / static_cast<double>(n));
  return "hsl(" + std::to_string(hue) + ",70%,45%)";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const sim::Trace& trace, const SvgOptions& o) {
  std::size_t n = 0;
  Range xr, yr, zr, tr;
  for (const auto& e : trace.entries) {
    n = std::max(n, e.drones.size());
    tr.add(e.sim_time);
    for (const auto& d : e.drones) {
      xr.add(d.pose.position.x);
      yr.add(d.pose.position.y);
      zr.add(d.pose.position.z);
    }
  }
  zr.add(0.0);
  xr.settle();
  yr.settle();
  zr.settle();
  tr.settle();

  // Equal scale on both axes so formations keep their shape.
  const double span = std::max(xr.span(), yr.span()) * 1.1;
  const double cx = (xr.lo + xr.hi) / 2, cy = (yr.lo + yr.hi) / 2;
  const double p = o.panel_px, m = o.margin_px;
  auto px = [&](double x) { return m + (x - cx) / span * p + p / 2; };
  auto py = [&](double y) { return m + p / 2 - (y - cy) / span * p; };

  const double sx0 = 2 * m + p, sw = o.strip_px;
  auto st = [&](double t) { return sx0 + (t - tr.lo) / tr.span() * sw; };
  auto sz = [&](double z) { return m + p - (z - zr.lo) / zr.span() * p; };

  const double width = 3 * m + p + sw, height = 2 * m + p;
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(width) << "\" height=\""
    << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\"" << fmt(height) << "\" fill=\"white\"/>\n";
  if (!o.title.empty()) {
    s << "<text x=\"" << fmt(m) << "\" y=\"" << fmt(m / 2) << "\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(o.title) << "</text>\n";
  }
  s << "<rect x=\"" << fmt(m) << "\" y=\"" << fmt(m) << "\" width=\"" << fmt(p) << "\" height=\"" << fmt(p)
    << "\" fill=\"none\" stroke=\"#888\"/>\n"
    << "<rect x=\"" << fmt(sx0) << "\" y=\"" << fmt(m) << "\" width=\"" << fmt(sw) << "\" height=\"" << fmt(p)
    << "\" fill=\"none\" stroke=\"#888\"/>\n"
    << "<text x=\"" << fmt(m) << "\" y=\"" << fmt(m + p + 16) << "\" font-family=\"sans-serif\" font-size=\"11\">x "
    << fmt(xr.lo) << ".." << fmt(xr.hi) << " m, y " << fmt(yr.lo) << ".." << fmt(yr.hi) << " m</text>\n"
    << "<text x=\"" << fmt(sx0) << "\" y=\"" << fmt(m + p + 16)
    << "\" font-family=\"sans-serif\" font-size=\"11\">z " << fmt(zr.lo) << ".." << fmt(zr.hi) << " m over "
    << fmt(tr.lo) << ".." << fmt(tr.hi) << " s</text>\n";

  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream xy, tz;
    const sim::DroneState* first = nullptr;
    const sim::DroneState* last = nullptr;
    for (const auto& e : trace.entries) {
      if (i >= e.drones.size()) continue;
      const auto& d = e.drones[i];
      if (!first) first = &d;
      last = &d;
      xy << fmt(px(d.pose.position.x)) << ',' << fmt(py(d.pose.position.y)) << ' ';
      tz << fmt(st(e.sim_time)) << ',' << fmt(sz(d.pose.position.z)) << ' ';
    }
    if (!first) continue;
    const std::string c = color_for(i, n);
    s << "<g id=\"drone-" << first->id << "\" stroke=\"" << c << "\" fill=\"none\">\n"
      << "<polyline points=\"" << xy.str() << "\" stroke-width=\"1.5\"/>\n"
      << "<polyline points=\"" << tz.str() << "\" stroke-width=\"1\"/>\n"
      << "<circle cx=\"" << fmt(px(first->pose.position.x)) << "\" cy=\"" << fmt(py(first->pose.position.y))
      << "\" r=\"4\" fill=\"" << c << "\"/>\n"
      << "<rect x=\"" << fmt(px(last->pose.position.x) - 4) << "\" y=\"" << fmt(py(last->pose.position.y) - 4)
      << "\" width=\"8\" height=\"8\"/>\n"
      << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace sib::plot
