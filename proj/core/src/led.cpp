#include "sib/led.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace sib::sim {
namespace {

// Guards floor() against 0.5000000000000001-style products of tick counts.
constexpr double kPhaseEps = 1e-9;

Color scaled(Color c, double factor) {
  auto ch = [factor](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v * factor, 0.0, 255.0)));
  };
  return {ch(c.r), ch(c.g), ch(c.b)};
}

long long whole_periods(double cycles) { return static_cast<long long>(std::floor(cycles + kPhaseEps)); }

}  // namespace

std::string_view to_string(FlightMode mode) {
  switch (mode) {
    case FlightMode::Landed: return "landed";
    case FlightMode::TakingOff: return "taking_off";
    case FlightMode::Hovering: return "hovering";
    case FlightMode::Navigating: return "navigating";
    case FlightMode::Landing: return "landing";
  }
  return "landed";
}

std::optional<FlightMode> flight_mode_from_string(std::string_view name) {
  for (auto m : {FlightMode::Landed, FlightMode::TakingOff, FlightMode::Hovering, FlightMode::Navigating,
                 FlightMode::Landing}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view to_string(Effect e) {
  switch (e) {
    case Effect::Fill: return "fill";
    case Effect::Fade: return "fade";
    case Effect::Flash: return "flash";
    case Effect::Blink: return "blink";
    case Effect::BlinkFast: return "blink_fast";
    case Effect::Wipe: return "wipe";
    case Effect::Rainbow: return "rainbow";
    case Effect::RainbowFill: return "rainbow_fill";
  }
  return "fill";
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::All: return "all";
    case Group::Random: return "random";
    case Group::Even: return "even";
    case Group::Odd: return "odd";
    case Group::Formation2D: return "formation_2d";
  }
  return "all";
}

std::optional<Effect> effect_from_string(std::string_view name) {
  for (auto e : {Effect::Fill, Effect::Fade, Effect::Flash, Effect::Blink, Effect::BlinkFast, Effect::Wipe,
                 Effect::Rainbow, Effect::RainbowFill}) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

std::optional<Group> group_from_string(std::string_view name) {
  for (auto g : {Group::All, Group::Random, Group::Even, Group::Odd, Group::Formation2D}) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

Color hsv_to_rgb(double hue_deg, double saturation, double value) {
  double h = std::fmod(hue_deg, 360.0);
  if (h < 0.0) h += 360.0;
  const double chroma = value * saturation;
  const int sector = std::min(static_cast<int>(h / 60.0), 5);
  // Fractional position inside the sector. Computing it directly avoids the
  // cancellation in the 1 - |(h/60 mod 2) - 1| form.
  const double f = h / 60.0 - sector;
  const double rising = chroma * f;
  const double falling = chroma * (1.0 - f);
  double r = 0.0, g = 0.0, b = 0.0;
  switch (sector) {
    case 0: r = chroma; g = rising; break;
    case 1: r = falling; g = chroma; break;
    case 2: g = chroma; b = rising; break;
    case 3: g = falling; b = chroma; break;
    case 4: r = rising; b = chroma; break;
    default: r = chroma; b = falling; break;
  }
  const double m = value - chroma;
  auto ch = [m](double c) { return static_cast<std::uint8_t>(std::lround(std::clamp((c + m) * 255.0, 0.0, 255.0))); };
  return {ch(r), ch(g), ch(b)};
}

std::vector<bool> group_mask(Group group, int n, std::uint64_t seed, std::span<const double> altitudes,
                             double altitude_tolerance) {
  std::vector<bool> mask(static_cast<std::size_t>(std::max(n, 0)), false);
  switch (group) {
    case Group::All:
      std::fill(mask.begin(), mask.end(), true);
      break;
    case Group::Even:
    case Group::Odd:
      for (int k = 0; k < n; ++k) mask[static_cast<std::size_t>(k)] = (k % 2 == 0) == (group == Group::Even);
      break;
    case Group::Random: {
      // mt19937_64 output is fully specified, so the subset is portable.
      std::mt19937_64 rng(seed);
      for (int k = 0; k < n; ++k) mask[static_cast<std::size_t>(k)] = (rng() >> 63) != 0;
      break;
    }
    case Group::Formation2D: {
      if (altitudes.size() < static_cast<std::size_t>(n)) {
        std::fill(mask.begin(), mask.end(), true);
        break;
      }
      // Modal altitude: the z with the most drones within tolerance; lowest z wins ties.
      double modal = 0.0;
      int best = -1;
      for (int i = 0; i < n; ++i) {
        int count = 0;
        for (int j = 0; j < n; ++j) {
          if (std::fabs(altitudes[static_cast<std::size_t>(j)] - altitudes[static_cast<std::size_t>(i)]) <=
              altitude_tolerance) {
            ++count;
          }
        }
        const double z = altitudes[static_cast<std::size_t>(i)];
        if (count > best || (count == best && z < modal)) {
          best = count;
          modal = z;
        }
      }
      for (int k = 0; k < n; ++k) {
        mask[static_cast<std::size_t>(k)] = std::fabs(altitudes[static_cast<std::size_t>(k)] - modal) <= altitude_tolerance;
      }
      break;
    }
  }
  return mask;
}

std::vector<Color> led_frame(const EffectSpec& spec, int n, std::int64_t frame_index, std::uint64_t seed,
                             const LedContext& ctx) {
  const auto count = static_cast<std::size_t>(std::max(n, 0));
  std::vector<Color> out(count);
  for (std::size_t k = 0; k < count && k < ctx.previous.size(); ++k) out[k] = ctx.previous[k];

  const std::vector<bool> members = group_mask(spec.group, n, seed, ctx.altitudes, ctx.altitude_tolerance);
  const double t = static_cast<double>(frame_index) * ctx.frame_dt;
  const Color black{};
  const Color base = spec.base_color;

  std::size_t member_rank = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (!members[k]) continue;
    Color c = base;
    switch (spec.effect) {
      case Effect::Fill:
        break;
      case Effect::Fade:
        c = scaled(base, std::min(1.0, t * spec.rate));
        break;
      case Effect::Flash:
        c = whole_periods(t * spec.rate) < 1 ? base : black;
        break;
      case Effect::Blink:
        c = whole_periods(2.0 * spec.rate * t) % 2 == 0 ? base : black;
        break;
      case Effect::BlinkFast:
        c = whole_periods(2.0 * 4.0 * spec.rate * t) % 2 == 0 ? base : black;
        break;
      case Effect::Wipe:
        if (whole_periods(t * spec.rate) < static_cast<long long>(member_rank)) c = out[k];
        break;
      case Effect::Rainbow:
        c = hsv_to_rgb(360.0 * static_cast<double>(k) / n, 1.0, 1.0);
        break;
      case Effect::RainbowFill:
        c = hsv_to_rgb(std::fmod(360.0 * spec.rate * t, 360.0), 1.0, 1.0);
        break;
    }
    out[k] = c;
    ++member_rank;
  }
  return out;
}

}  // namespace sib::sim
