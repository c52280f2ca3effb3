#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sib/drone.h"

namespace sib::sim {

// Extra inputs a frame may depend on. Colors of drones outside the selected
// group (and drones a Wipe has not reached yet) come from `previous`; when it
// is empty they are black.
struct LedContext {
  std::span<const Color> previous;
  std::span<const double> altitudes;  // only read by Group::Formation2D
  double frame_dt = 0.05;
  double altitude_tolerance = 0.2;
};

// Pure function of its arguments.
std::vector<Color> led_frame(const EffectSpec& spec, int n, std::int64_t frame_index, std::uint64_t seed,
                             const LedContext& ctx = {});

// Which drones an effect applies to.
std::vector<bool> group_mask(Group group, int n, std::uint64_t seed, std::span<const double> altitudes,
                             double altitude_tolerance);

// hue in degrees, saturation and value in [0, 1]; channels rounded to nearest.
Color hsv_to_rgb(double hue_deg, double saturation, double value);

}  // namespace sib::sim
