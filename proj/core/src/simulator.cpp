#include "sib/simulator.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "sib/error.h"
#include "sib/led.h"

namespace sib::sim {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool can_navigate(FlightMode m) {
  return m == FlightMode::TakingOff || m == FlightMode::Hovering || m == FlightMode::Navigating;
}

void require_finite(Vec3 v, const char* what) {
  if (!v.finite()) throw Error(Errc::InvalidArgument, std::string(what) + " must be finite");
}

}  // namespace

std::string_view to_string(SimEvent::Kind kind) {
  switch (kind) {
    case SimEvent::Kind::TookOff: return "took_off";
    case SimEvent::Kind::Arrived: return "arrived";
    case SimEvent::Kind::Landed: return "landed";
    case SimEvent::Kind::BatteryDepleted: return "battery_depleted";
  }
  return "arrived";
}

std::vector<DroneState> spawn_swarm(int n, double spacing, double max_speed) {
  if (n < 1 || n > kMaxDrones) {
    throw Error(Errc::InvalidCount, "swarm size must be in 1.." + std::to_string(kMaxDrones));
  }
  if (!std::isfinite(spacing)) throw Error(Errc::InvalidArgument, "spacing must be finite");
  std::vector<DroneState> drones(static_cast<std::size_t>(n));
  const double cpu = std::clamp(0.2 + 0.01 * n, 0.0, 1.0);
  for (int k = 0; k < n; ++k) {
    auto& d = drones[static_cast<std::size_t>(k)];
    d.id = k;
    d.pose.position = {k * spacing, 0.0, 0.0};
    d.mode = FlightMode::Landed;
    d.battery = 1.0;
    d.cpu = cpu;
    d.max_speed = max_speed;
  }
  return drones;
}

Simulator::Simulator(SimConfig config, std::vector<DroneState> drones)
    : config_(config), drones_(std::move(drones)), control_(drones_.size()) {
  if (!(config_.tick_dt > 0.0)) throw Error(Errc::InvalidArgument, "tick_dt must be positive");
  if (drones_.empty() || drones_.size() > static_cast<std::size_t>(kMaxDrones)) {
    throw Error(Errc::InvalidCount, "swarm size must be in 1.." + std::to_string(kMaxDrones));
  }
  clock_.tick_dt = config_.tick_dt;
  for (std::size_t i = 0; i < drones_.size(); ++i) {
    if (drones_[i].id != static_cast<int>(i)) throw Error(Errc::InvalidArgument, "drone ids must be 0..n-1");
  }
}

Simulator::Simulator(SimConfig config, int n, double spacing)
    : Simulator(config, spawn_swarm(n, spacing, config.max_speed)) {}

Snapshot Simulator::snapshot() const {
  std::lock_guard lock(mutex_);
  return {clock_, drones_};
}

SimClock Simulator::clock() const {
  std::lock_guard lock(mutex_);
  return clock_;
}

void Simulator::set_safe_distance(double d_safe) {
  if (!(d_safe > 0.0)) throw Error(Errc::InvalidArgument, "d_safe must be positive");
  std::lock_guard lock(mutex_);
  config_.d_safe = d_safe;
}

std::optional<avoid::ResolvedPlan> Simulator::last_plan() const {
  std::lock_guard lock(mutex_);
  return last_plan_;
}

void Simulator::check_drone(int id) const {
  if (id < 0 || id >= static_cast<int>(drones_.size())) {
    throw Error(Errc::UnknownDrone, "no drone with id " + std::to_string(id));
  }
}

void Simulator::send(const Command& command) {
  std::lock_guard lock(mutex_);
  Pending pending{command, std::nullopt};
  std::visit(
      overloaded{
          [&](const cmd::TakeoffAll& c) {
            if (!(c.z > 0.0) || !std::isfinite(c.z)) throw Error(Errc::InvalidArgument, "takeoff altitude must be positive");
          },
          [&](const cmd::LandAll&) {},
          [&](const cmd::Land& c) { check_drone(c.drone); },
          [&](const cmd::Navigate& c) {
            require_finite(c.position, "navigation target");
            if (!(c.speed > 0.0)) throw Error(Errc::InvalidArgument, "navigation speed must be positive");
            if (c.drone != kAllDrones) {
              check_drone(c.drone);
              if (!can_navigate(drones_[static_cast<std::size_t>(c.drone)].mode)) {
                throw Error(Errc::NotAirborne, "drone " + std::to_string(c.drone) + " is not airborne");
              }
            } else {
              for (const auto& d : drones_) {
                if (!can_navigate(d.mode)) throw Error(Errc::NotAirborne, "drone " + std::to_string(d.id) + " is not airborne");
              }
            }
          },
          [&](const cmd::SetTargets& c) {
            if (!(c.speed > 0.0)) throw Error(Errc::InvalidArgument, "formation speed must be positive");
            std::set<int> seen;
            for (const auto& t : c.targets) {
              check_drone(t.drone);
              require_finite(t.pose.position, "formation target");
              if (!seen.insert(t.drone).second) {
                throw Error(Errc::InvalidArgument, "drone " + std::to_string(t.drone) + " targeted twice");
              }
              if (!can_navigate(drones_[static_cast<std::size_t>(t.drone)].mode)) {
                throw Error(Errc::NotAirborne, "drone " + std::to_string(t.drone) + " is not airborne");
              }
            }
            const double speed = std::min(c.speed, config_.max_speed);
            std::vector<avoid::Trajectory> plan;
            plan.reserve(drones_.size());
            for (const auto& d : drones_) {
              plan.push_back({d.id, d.pose.position, d.pose.position, 0.0, 0.0});
            }
            for (const auto& t : c.targets) {
              auto& traj = plan[static_cast<std::size_t>(t.drone)];
              traj.goal = t.pose.position;
              traj.speed = traj.start == traj.goal ? 0.0 : speed;
            }
            pending.plan = avoid::resolve(plan, config_.d_safe);
          },
          [&](const cmd::SetLed& c) {
            if (!(c.spec.rate > 0.0) || !std::isfinite(c.spec.rate)) throw Error(Errc::InvalidArgument, "LED rate must be positive");
          },
          [&](const cmd::ManualVelocity& c) {
            check_drone(c.drone);
            require_finite(c.velocity, "manual velocity");
            if (!std::isfinite(c.yaw_rate)) throw Error(Errc::InvalidArgument, "yaw rate must be finite");
            if (!can_navigate(drones_[static_cast<std::size_t>(c.drone)].mode)) {
              throw Error(Errc::NotAirborne, "drone " + std::to_string(c.drone) + " is not airborne");
            }
          },
          [&](const cmd::Hover&) {},
      },
      command);
  if (pending.plan) last_plan_ = pending.plan;
  queue_.push_back(std::move(pending));
}

void Simulator::start_landing(std::size_t index) {
  auto& d = drones_[index];
  if (d.mode == FlightMode::Landed || d.mode == FlightMode::Landing) return;
  auto& c = control_[index];
  d.mode = FlightMode::Landing;
  d.target = Pose{{d.pose.position.x, d.pose.position.y, 0.0}, d.pose.yaw};
  c.speed = config_.max_speed;
  c.depart_tick = clock_.tick_count;
  c.manual_velocity.reset();
  c.yaw_rate = 0.0;
}

void Simulator::apply(const Pending& pending) {
  const std::int64_t now = clock_.tick_count;
  auto navigate_to = [&](std::size_t i, Pose target, double speed, std::int64_t depart) {
    auto& d = drones_[i];
    if (!can_navigate(d.mode)) return;
    auto& c = control_[i];
    // TakingOff passes through Hovering on its way to Navigating.
    d.mode = FlightMode::Navigating;
    target.yaw = geom::normalize_yaw(target.yaw);
    d.target = target;
    c.speed = std::min(speed, config_.max_speed);
    c.depart_tick = depart;
    c.manual_velocity.reset();
    c.yaw_rate = 0.0;
  };

  std::visit(
      overloaded{
          [&](const cmd::TakeoffAll& c) {
            for (std::size_t i = 0; i < drones_.size(); ++i) {
              auto& d = drones_[i];
              const Pose target{{d.pose.position.x, d.pose.position.y, c.z}, d.pose.yaw};
              if (d.mode == FlightMode::Landed) {
                if (d.battery <= 0.0) continue;
                d.mode = FlightMode::TakingOff;
                d.target = target;
                control_[i].speed = config_.max_speed;
                control_[i].depart_tick = now;
                control_[i].manual_velocity.reset();
              } else if (d.mode == FlightMode::Hovering || d.mode == FlightMode::Navigating) {
                navigate_to(i, target, config_.max_speed, now);
              }
            }
          },
          [&](const cmd::LandAll&) {
            for (std::size_t i = 0; i < drones_.size(); ++i) start_landing(i);
          },
          [&](const cmd::Land& c) { start_landing(static_cast<std::size_t>(c.drone)); },
          [&](const cmd::Navigate& c) {
            if (c.drone != kAllDrones) {
              const auto i = static_cast<std::size_t>(c.drone);
              navigate_to(i, {c.position, c.yaw.value_or(drones_[i].pose.yaw)}, c.speed, now);
              return;
            }
            Vec3 center;
            for (const auto& d : drones_) center = center + d.pose.position;
            center = center * (1.0 / static_cast<double>(drones_.size()));
            for (std::size_t i = 0; i < drones_.size(); ++i) {
              const Vec3 goal = c.position + (drones_[i].pose.position - center);
              navigate_to(i, {goal, c.yaw.value_or(drones_[i].pose.yaw)}, c.speed, now);
            }
          },
          [&](const cmd::SetTargets& c) {
            const auto& plan = *pending.plan;
            for (const auto& t : c.targets) {
              const auto i = static_cast<std::size_t>(t.drone);
              const auto& traj = plan.trajectories[i];
              const auto delay = static_cast<std::int64_t>(std::llround(traj.depart_time / config_.tick_dt));
              // Stationary entries may still carry a yaw change.
              const double speed = traj.speed > 0.0 ? traj.speed : config_.max_speed;
              navigate_to(i, {traj.goal, geom::normalize_yaw(t.pose.yaw)}, speed, now + delay);
            }
          },
          [&](const cmd::SetLed& c) {
            effect_ = c.spec;
            effect_start_tick_ = now;
            effect_seed_ = splitmix64(config_.seed ^ splitmix64(effect_count_++));
          },
          [&](const cmd::ManualVelocity& c) {
            const auto i = static_cast<std::size_t>(c.drone);
            auto& d = drones_[i];
            if (!can_navigate(d.mode)) return;
            auto& ctl = control_[i];
            Vec3 v = c.velocity;
            const double speed = v.norm();
            if (speed > config_.max_speed) v = v * (config_.max_speed / speed);
            d.target.reset();
            if (speed == 0.0 && c.yaw_rate == 0.0) {
              ctl.manual_velocity.reset();
              ctl.yaw_rate = 0.0;
              d.mode = FlightMode::Hovering;
            } else {
              ctl.manual_velocity = v;
              ctl.yaw_rate = std::clamp(c.yaw_rate, -config_.max_yaw_rate, config_.max_yaw_rate);
              d.mode = FlightMode::Navigating;
            }
          },
          [&](const cmd::Hover&) {
            for (std::size_t i = 0; i < drones_.size(); ++i) {
              auto& d = drones_[i];
              if (d.mode != FlightMode::TakingOff && d.mode != FlightMode::Navigating) continue;
              d.mode = FlightMode::Hovering;
              d.target.reset();
              control_[i].manual_velocity.reset();
              control_[i].yaw_rate = 0.0;
            }
          },
      },
      pending.command);
}

void Simulator::step_drone(std::size_t index, std::vector<SimEvent>& events) {
  auto& d = drones_[index];
  auto& c = control_[index];
  if (d.mode == FlightMode::Landed) {
    d.velocity = {};
    return;
  }
  ++c.airborne_ticks;
  const double dt = config_.tick_dt;
  const Vec3 before = d.pose.position;
  bool reached = false;

  if (c.manual_velocity) {
    d.pose.position = d.pose.position + *c.manual_velocity * dt;
    d.pose.position.z = std::max(0.0, d.pose.position.z);
    d.pose.yaw = geom::normalize_yaw(d.pose.yaw + c.yaw_rate * dt);
  } else if (d.target && clock_.tick_count >= c.depart_tick) {
    const Vec3 delta = d.target->position - d.pose.position;
    const double dist = delta.norm();
    const double step = c.speed * dt;
    if (dist <= step) {
      d.pose.position = d.target->position;
    } else {
      d.pose.position = d.pose.position + delta * (step / dist);
    }
    const double yaw_error = geom::normalize_yaw(d.target->yaw - d.pose.yaw);
    const double yaw_step = config_.max_yaw_rate * dt;
    if (std::fabs(yaw_error) <= yaw_step) {
      d.pose.yaw = d.target->yaw;
    } else {
      d.pose.yaw = geom::normalize_yaw(d.pose.yaw + std::copysign(yaw_step, yaw_error));
    }
    reached = d.pose.position == d.target->position && d.pose.yaw == d.target->yaw;
  }
  d.velocity = (d.pose.position - before) * (1.0 / dt);

  switch (d.mode) {
    case FlightMode::TakingOff:
      if (d.target && std::fabs(d.pose.position.z - d.target->position.z) <= config_.nav_tolerance) {
        d.mode = FlightMode::Hovering;
        events.push_back({SimEvent::Kind::TookOff, d.id});
      }
      if (reached) d.target.reset();
      break;
    case FlightMode::Hovering:
      if (reached) d.target.reset();
      break;
    case FlightMode::Navigating:
      if (reached) {
        d.mode = FlightMode::Hovering;
        d.target.reset();
        events.push_back({SimEvent::Kind::Arrived, d.id});
      }
      break;
    case FlightMode::Landing:
      if (d.pose.position.z <= config_.nav_tolerance) {
        d.mode = FlightMode::Landed;
        d.velocity = {};
        d.target.reset();
        events.push_back({SimEvent::Kind::Landed, d.id});
      }
      break;
    case FlightMode::Landed:
      break;
  }

  d.battery = std::max(0.0, 1.0 - static_cast<double>(c.airborne_ticks) * dt / config_.battery_life_s);
  if (d.battery <= 0.0 && d.mode != FlightMode::Landing && d.mode != FlightMode::Landed) {
    start_landing(index);
    events.push_back({SimEvent::Kind::BatteryDepleted, d.id});
  }
}

std::vector<SimEvent> Simulator::tick() {
  std::lock_guard lock(mutex_);
  while (!queue_.empty()) {
    apply(queue_.front());
    queue_.pop_front();
  }

  std::vector<SimEvent> events;
  for (std::size_t i = 0; i < drones_.size(); ++i) step_drone(i, events);

  if (effect_) {
    const int n = static_cast<int>(drones_.size());
    std::vector<Color> previous(drones_.size());
    std::vector<double> altitudes(drones_.size());
    for (std::size_t i = 0; i < drones_.size(); ++i) {
      previous[i] = drones_[i].led;
      altitudes[i] = drones_[i].pose.position.z;
    }
    LedContext ctx{previous, altitudes, config_.tick_dt, config_.led_altitude_tolerance};
    const auto colors = led_frame(*effect_, n, clock_.tick_count - effect_start_tick_, effect_seed_, ctx);
    for (std::size_t i = 0; i < drones_.size(); ++i) drones_[i].led = colors[i];
  }

  ++clock_.tick_count;
  return events;
}

}  // namespace sib::sim
