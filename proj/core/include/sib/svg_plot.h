#pragma once

#include <string>

#include "sib/trace.h"

namespace sib::plot {

struct SvgOptions {
  int panel_px = 480;  // square XY panel
  int strip_px = 240;  // altitude strip width
  int margin_px = 40;
  std::string title;
};

// SVG 1.1 document: top-down XY trajectories, one color per drone, a circle
// at the start and a square at the end, plus z over time in a side strip.
std::string render_svg(const sim::Trace& trace, const SvgOptions& options = {});

}  // namespace sib::plot
