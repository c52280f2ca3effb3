#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <variant>
#include <vector>

#include "sib/avoidance.h"
#include "sib/drone.h"

namespace sib::sim {

struct SimConfig {
  double tick_dt = 0.05;
  double max_speed = 1.0;
  double max_yaw_rate = geom::kPi / 2.0;
  // Mode-transition tolerance of the flight controller. Block completion uses
  // the interpreter's own RuntimeParams::nav_tolerance.
  double nav_tolerance = 0.01;
  double d_safe = avoid::kDefaultSafeDistance;
  double battery_life_s = 600.0;
  double led_altitude_tolerance = 0.2;
  std::uint64_t seed = 0;
};

struct SimClock {
  double tick_dt = 0.05;
  std::int64_t tick_count = 0;

  double sim_time() const { return static_cast<double>(tick_count) * tick_dt; }
};

inline constexpr int kAllDrones = -1;
inline constexpr int kMaxDrones = 256;

namespace cmd {
struct TakeoffAll {
  double z = 1.0;
};
struct LandAll {};
struct Land {
  int drone = 0;
};
// drone == kAllDrones moves the swarm centroid to `position`, keeping offsets.
struct Navigate {
  int drone = kAllDrones;
  Vec3 position;
  std::optional<double> yaw;
  double speed = 1.0;
};
struct Target {
  int drone = 0;
  Pose pose;
};
// Routed through collision resolution before acceptance.
struct SetTargets {
  std::vector<Target> targets;
  double speed = 1.0;
};
struct SetLed {
  EffectSpec spec;
};
struct ManualVelocity {
  int drone = 0;
  Vec3 velocity;
  double yaw_rate = 0.0;
};
// Moving drones stop where they are; landing continues.
struct Hover {};
}  // namespace cmd

using Command = std::variant<cmd::TakeoffAll, cmd::LandAll, cmd::Land, cmd::Navigate, cmd::SetTargets,
                             cmd::SetLed, cmd::ManualVelocity, cmd::Hover>;

class CommandSink {
 public:
  virtual ~CommandSink() = default;
  // Validates against the current state and queues for the next tick boundary.
  virtual void send(const Command& command) = 0;
};

struct SimEvent {
  enum class Kind { TookOff, Arrived, Landed, BatteryDepleted };
  Kind kind;
  int drone;

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

std::string_view to_string(SimEvent::Kind kind);

struct Snapshot {
  SimClock clock;
  std::vector<DroneState> drones;

  double sim_time() const { return clock.sim_time(); }
};

// n Landed drones on the x axis, ids 0..n-1. Throws Error{InvalidCount}.
std::vector<DroneState> spawn_swarm(int n, double spacing, double max_speed = 1.0);

class Simulator final : public CommandSink {
 public:
  Simulator(SimConfig config, std::vector<DroneState> drones);
  Simulator(SimConfig config, int n, double spacing = 1.0);

  void send(const Command& command) override;
  std::vector<SimEvent> tick();

  Snapshot snapshot() const;
  SimClock clock() const;
  const SimConfig& config() const { return config_; }
  void set_safe_distance(double d_safe);
  // Plan accepted by the most recent SetTargets.
  std::optional<avoid::ResolvedPlan> last_plan() const;

 private:
  struct Control {
    double speed = 0.0;
    std::int64_t depart_tick = 0;
    std::optional<Vec3> manual_velocity;
    double yaw_rate = 0.0;
    std::int64_t airborne_ticks = 0;
  };
  struct Pending {
    Command command;
    std::optional<avoid::ResolvedPlan> plan;
  };

  void check_drone(int id) const;
  void apply(const Pending& pending);
  void start_landing(std::size_t index);
  void step_drone(std::size_t index, std::vector<SimEvent>& events);

  SimConfig config_;
  mutable std::mutex mutex_;
  SimClock clock_;
  std::vector<DroneState> drones_;
  std::vector<Control> control_;
  std::deque<Pending> queue_;
  std::optional<EffectSpec> effect_;
  std::int64_t effect_start_tick_ = 0;
  std::uint64_t effect_seed_ = 0;
  std::uint64_t effect_count_ = 0;
  std::optional<avoid::ResolvedPlan> last_plan_;
};

}  // namespace sib::sim
