#include "sib/rtf.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include <nlohmann/json.hpp>

#include "sib/error.h"

namespace sib::sim {
namespace {

constexpr double kOrbitRadius = 0.5;
constexpr double kOrbitRate = 0.5;  // rad/s
constexpr double kCruiseAltitude = 1.0;

double min_separation(const std::vector<DroneState>& drones) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < drones.size(); ++i) {
    for (std::size_t j = i + 1; j < drones.size(); ++j) {
      best = std::min(best, geom::distance(drones[i].pose.position, drones[j].pose.position));
    }
  }
  return best;
}

std::string telemetry_frame(const Snapshot& s) {
  nlohmann::json drones = nlohmann::json::array();
  for (const auto& d : s.drones) {
    drones.push_back({{"id", d.id},
                      {"x", d.pose.position.x},
                      {"y", d.pose.position.y},
                      {"z", d.pose.position.z},
                      {"yaw", d.pose.yaw},
                      {"mode", std::string(to_string(d.mode))},
                      {"battery", d.battery}});
  }
  return nlohmann::json{{"t", s.sim_time()}, {"drones", std::move(drones)}}.dump();
}

}  // namespace

RtfSample RtfSample::from_windows(double sim_seconds, double wall_seconds) {
  if (!(wall_seconds > 0.0)) throw Error(Errc::InvalidArgument, "wall-clock window must be positive");
  if (!(sim_seconds >= 0.0)) throw Error(Errc::InvalidArgument, "simulated window must be nonnegative");
  return {wall_seconds, sim_seconds, sim_seconds / wall_seconds};
}

RtfSample measure_rtf(int n_drones, double sim_duration, const SimConfig& config) {
  if (n_drones < 1) throw Error(Errc::InvalidCount, "need at least one drone");
  if (!(sim_duration > 0.0)) throw Error(Errc::InvalidArgument, "duration must be positive");

  Simulator sim(config, n_drones, 2.0 * kOrbitRadius + config.d_safe + 0.5);
  const auto spawn = sim.snapshot().drones;
  const auto ticks = static_cast<std::int64_t>(std::ceil(sim_duration / config.tick_dt - 1e-9));

  std::size_t sink = 0;
  const auto t0 = std::chrono::steady_clock::now();
  sim.send(cmd::TakeoffAll{kCruiseAltitude});
  for (std::int64_t k = 0; k < ticks; ++k) {
    const Snapshot before = sim.snapshot();
    if (k > 0) {
      const double angle = kOrbitRate * (before.sim_time() + config.tick_dt);
      for (const auto& d : before.drones) {
        if (d.mode == FlightMode::Landed || d.mode == FlightMode::Landing) continue;
        const Vec3 home = spawn[static_cast<std::size_t>(d.id)].pose.position;
        const Vec3 goal{home.x + kOrbitRadius * std::cos(angle), home.y + kOrbitRadius * std::sin(angle),
                        kCruiseAltitude};
        sim.send(cmd::Navigate{d.id, goal, std::nullopt, config.max_speed});
      }
    }
    sim.tick();
    const Snapshot after = sim.snapshot();
    sink += telemetry_frame(after).size();
    if (min_separation(after.drones) < 0.0) ++sink;
  }
  const auto t1 = std::chrono::steady_clock::now();
  const double wall = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
  if (sink == 0) throw Error(Errc::InvalidArgument, "empty workload");
  return RtfSample::from_windows(static_cast<double>(ticks) * config.tick_dt, wall);
}

BenchRow summarize(int n_drones, std::span<const RtfSample> samples) {
  if (samples.empty()) throw Error(Errc::InvalidArgument, "no samples to summarize");
  std::vector<double> rtf;
  for (const auto& s : samples) rtf.push_back(s.rtf);
  std::sort(rtf.begin(), rtf.end());
  const std::size_t mid = rtf.size() / 2;
  const double median = rtf.size() % 2 ? rtf[mid] : 0.5 * (rtf[mid - 1] + rtf[mid]);
  return {n_drones, median, rtf.front(), rtf.back(), static_cast<int>(rtf.size())};
}

BenchReport run_bench(std::span<const int> drone_counts, double sim_duration, int runs, const SimConfig& config) {
  if (drone_counts.empty()) throw Error(Errc::InvalidArgument, "drone list must not be empty");
  if (runs < 1) throw Error(Errc::InvalidArgument, "runs must be at least 1");
  std::vector<int> counts(drone_counts.begin(), drone_counts.end());
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());

  // Warm caches and the allocator so the first measured row is not penalized.
  measure_rtf(counts.front(), sim_duration, config);

  BenchReport report;
  for (int n : counts) {
    std::vector<RtfSample> samples;
    for (int r = 0; r < runs; ++r) samples.push_back(measure_rtf(n, sim_duration, config));
    report.rows.push_back(summarize(n, samples));
  }
  return report;
}

std::string to_csv(const BenchReport& report) {
  std::string out = "n,rtf_median,rtf_min,rtf_max,runs\n";
  char line[160];
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof line, "%d,%.4f,%.4f,%.4f,%d\n", row.n_drones, row.rtf_median, row.rtf_min, row.rtf_max,
                  row.runs);
    out += line;
  }
  return out;
}

}  // namespace sib::sim
