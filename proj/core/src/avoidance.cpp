#include "sib/avoidance.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "sib/error.h"

namespace sib::avoid {
namespace {

constexpr double kParallelThreshold = 1e-9;

void require_positive_safe_distance(double d_safe) {
  if (!(d_safe > 0.0) || !std::isfinite(d_safe)) {
    throw Error(Errc::InvalidArgument, "d_safe must be positive");
  }
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::StationaryMoving: return "stationary_moving";
    case Scenario::Parallel: return "parallel";
    case Scenario::NonParallel: return "non_parallel";
  }
  return "stationary_moving";
}

double Trajectory::arrival_time() const {
  if (stationary()) return depart_time;
  return depart_time + distance(start, goal) / speed;
}

Vec3 Trajectory::velocity() const {
  if (stationary()) return {};
  const Vec3 d = goal - start;
  return d * (speed / d.norm());
}

Vec3 Trajectory::position_at(double t) const {
  if (stationary() || t <= depart_time) return start;
  const double arrive = arrival_time();
  if (t >= arrive) return goal;
  return start + (goal - start) * ((t - depart_time) / (arrive - depart_time));
}

void validate(const Trajectory& t) {
  if (!t.start.finite() || !t.goal.finite() || !std::isfinite(t.speed) || !std::isfinite(t.depart_time)) {
    throw Error(Errc::InvalidArgument, "trajectory for drone " + std::to_string(t.drone_id) + " is not finite");
  }
  if (t.speed < 0.0) throw Error(Errc::InvalidArgument, "negative speed for drone " + std::to_string(t.drone_id));
  if (t.depart_time < 0.0) {
    throw Error(Errc::InvalidArgument, "negative depart time for drone " + std::to_string(t.drone_id));
  }
  if (t.speed == 0.0 && !(t.start == t.goal)) {
    throw Error(Errc::InvalidArgument, "stationary drone " + std::to_string(t.drone_id) + " has a distinct goal");
  }
}

Conflict cpa(const Trajectory& a, const Trajectory& b) {
  Conflict out;
  out.pair = {std::min(a.drone_id, b.drone_id), std::max(a.drone_id, b.drone_id)};

  const Vec3 va = a.velocity();
  const Vec3 vb = b.velocity();
  if (a.stationary() || b.stationary()) {
    out.scenario = Scenario::StationaryMoving;
  } else {
    const Vec3 ua = va * (1.0 / va.norm());
    const Vec3 ub = vb * (1.0 / vb.norm());
    out.scenario = ua.cross(ub).norm() < kParallelThreshold ? Scenario::Parallel : Scenario::NonParallel;
  }

  // Breakpoints split time into pieces where both velocities are constant.
  std::vector<double> marks{0.0, a.depart_time, a.arrival_time(), b.depart_time, b.arrival_time()};
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  double best_t = 0.0;
  double best_d = distance(a.position_at(0.0), b.position_at(0.0));
  auto consider = [&](double t) {
    const double d = distance(a.position_at(t), b.position_at(t));
    if (d < best_d || (d == best_d && t < best_t)) {
      best_d = d;
      best_t = t;
    }
  };

  for (std::size_t k = 0; k + 1 < marks.size(); ++k) {
    const double t0 = marks[k];
    const double t1 = marks[k + 1];
    const Vec3 rel_v = (a.position_at(t1) - b.position_at(t1)) - (a.position_at(t0) - b.position_at(t0));
    const Vec3 rel_p = a.position_at(t0) - b.position_at(t0);
    consider(t0);
    consider(t1);
    const double speed_sq = rel_v.norm_sq();
    if (speed_sq > 0.0) {
      // rel_v spans the whole piece, so the parameter is a fraction of it.
      const double frac = std::clamp(-rel_p.dot(rel_v) / speed_sq, 0.0, 1.0);
      consider(t0 + frac * (t1 - t0));
    }
  }
  out.t_star = best_t;
  out.d_star = best_d;
  return out;
}

std::vector<Conflict> detect(std::span<const Trajectory> plan, double d_safe) {
  require_positive_safe_distance(d_safe);
  std::set<int> ids;
  for (const auto& t : plan) {
    validate(t);
    if (!ids.insert(t.drone_id).second) {
      throw Error(Errc::DuplicateDroneId, "duplicate drone id " + std::to_string(t.drone_id));
    }
  }
  std::vector<Conflict> out;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (std::size_t j = i + 1; j < plan.size(); ++j) {
      Conflict c = cpa(plan[i], plan[j]);
      if (c.d_star < d_safe) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(), [](const Conflict& x, const Conflict& y) {
    if (x.t_star != y.t_star) return x.t_star < y.t_star;
    return x.pair < y.pair;
  });
  return out;
}

ResolvedPlan resolve(std::span<const Trajectory> plan, double d_safe) {
  require_positive_safe_distance(d_safe);
  std::vector<Trajectory> working(plan.begin(), plan.end());
  // detect validates ids and trajectories up front.
  std::vector<Conflict> conflicts = detect(working, d_safe);

  struct Ladder {
    int delay_steps = 0;
    bool raised = false;
  };
  std::map<int, std::size_t> index_of;
  for (std::size_t i = 0; i < working.size(); ++i) index_of[working[i].drone_id] = i;
  std::map<int, Ladder> ladder;

  auto unresolvable = [](const Conflict& c, const std::string& why) {
    return Error(Errc::Unresolvable, "cannot separate drones " + std::to_string(c.pair.first) + " and " +
                                         std::to_string(c.pair.second) + ": " + why);
  };

  while (!conflicts.empty()) {
    const Conflict& c = conflicts.front();
    const Trajectory& low = working[index_of.at(c.pair.first)];
    const Trajectory& high = working[index_of.at(c.pair.second)];
    // The higher id yields unless it cannot move.
    int loser = c.pair.second;
    if (high.stationary()) {
      if (low.stationary()) throw unresolvable(c, "both drones are stationary");
      loser = c.pair.first;
    }
    Trajectory& t = working[index_of.at(loser)];
    const Trajectory& original = plan[index_of.at(loser)];
    Ladder& step = ladder[loser];
    if (!step.raised && step.delay_steps < kMaxDelaySteps) {
      ++step.delay_steps;
      t.depart_time = original.depart_time + step.delay_steps * (d_safe / t.speed);
    } else if (!step.raised) {
      step.raised = true;
      step.delay_steps = 0;
      t.depart_time = original.depart_time;
      t.goal.z = original.goal.z + kAltitudeOffset;
    } else {
      throw unresolvable(c, "delay and altitude budget exhausted for drone " + std::to_string(loser));
    }
    conflicts = detect(working, d_safe);
  }

  ResolvedPlan out;
  out.trajectories = std::move(working);
  for (const auto& [id, step] : ladder) {
    const Trajectory& t = out.trajectories[index_of.at(id)];
    const Trajectory& original = plan[index_of.at(id)];
    if (t.depart_time > original.depart_time) {
      out.adjustments.push_back({id, AdjustmentKind::Delay, t.depart_time - original.depart_time});
    }
    if (step.raised) out.adjustments.push_back({id, AdjustmentKind::AltitudeOffset, kAltitudeOffset});
  }
  return out;
}

}  // namespace sib::avoid
