#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "sib/geometry.h"

namespace sib::avoid {

using geom::Vec3;

inline constexpr double kDefaultSafeDistance = 0.5;
inline constexpr int kMaxDelaySteps = 20;
inline constexpr double kAltitudeOffset = 0.5;

// Straight-line constant-speed transition. The drone holds `start` until
// depart_time, moves at `speed`, then holds `goal`. speed == 0 means the drone
// stays at start (which must equal goal).
struct Trajectory {
  int drone_id = 0;
  Vec3 start;
  Vec3 goal;
  double speed = 0.0;
  double depart_time = 0.0;

  bool stationary() const { return speed <= 0.0 || start == goal; }
  double arrival_time() const;
  Vec3 position_at(double t) const;
  Vec3 velocity() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class Scenario { StationaryMoving, Parallel, NonParallel };

std::string_view to_string(Scenario s);

struct Conflict {
  std::pair<int, int> pair;  // (lower id, higher id)
  double t_star = 0.0;
  double d_star = 0.0;
  Scenario scenario = Scenario::StationaryMoving;
};

enum class AdjustmentKind { Delay, AltitudeOffset };

struct Adjustment {
  int drone_id = 0;
  AdjustmentKind kind = AdjustmentKind::Delay;
  double amount = 0.0;

  friend bool operator==(const Adjustment&, const Adjustment&) = default;
};

struct ResolvedPlan {
  std::vector<Trajectory> trajectories;
  std::vector<Adjustment> adjustments;
};

// Throws Error{InvalidArgument} on negative speed, negative depart time,
// non-finite input, or a zero-speed trajectory whose start differs from goal.
void validate(const Trajectory& t);

// Exact closest approach over the whole maneuver (hold, move, hold for both
// drones). t_star is the earliest time at which the minimum is attained.
Conflict cpa(const Trajectory& a, const Trajectory& b);

// Pairs whose closest approach is below d_safe, sorted by (t_star, pair).
std::vector<Conflict> detect(std::span<const Trajectory> plan, double d_safe);

// Priority goes to the lower drone id. The losing drone is delayed in steps
// of d_safe / speed (up to kMaxDelaySteps), then its goal is raised by
// kAltitudeOffset; if conflicts remain, throws Error{Unresolvable}.
ResolvedPlan resolve(std::span<const Trajectory> plan, double d_safe);

}  // namespace sib::avoid
