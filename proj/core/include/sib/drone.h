#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "sib/geometry.h"

namespace sib::sim {

using geom::Pose;
using geom::Vec3;

enum class FlightMode { Landed, TakingOff, Hovering, Navigating, Landing };

std::string_view to_string(FlightMode mode);
std::optional<FlightMode> flight_mode_from_string(std::string_view name);

inline bool airborne(FlightMode mode) { return mode != FlightMode::Landed; }

struct Color {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(Color, Color) = default;
};

enum class Effect { Fill, Fade, Flash, Blink, BlinkFast, Wipe, Rainbow, RainbowFill };
enum class Group { All, Random, Even, Odd, Formation2D };

std::string_view to_string(Effect e);
std::string_view to_string(Group g);
std::optional<Effect> effect_from_string(std::string_view name);
std::optional<Group> group_from_string(std::string_view name);

struct EffectSpec {
  Effect effect = Effect::Fill;
  Group group = Group::All;
  Color base_color;
  double rate = 1.0;  // Hz

  friend bool operator==(const EffectSpec&, const EffectSpec&) = default;
};

struct DroneState {
  int id = 0;
  Pose pose;
  Vec3 velocity;
  FlightMode mode = FlightMode::Landed;
  Color led;
  double battery = 1.0;
  double cpu = 0.0;
  std::optional<Pose> target;
  double max_speed = 1.0;

  friend bool operator==(const DroneState&, const DroneState&) = default;
};

}  // namespace sib::sim
