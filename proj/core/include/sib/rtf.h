#pragma once

#include <span>
#include <string>
#include <vector>

#include "sib/simulator.h"

namespace sib::sim {

struct RtfSample {
  double window_wall = 0.0;  // s
  double window_sim = 0.0;   // s
  double rtf = 0.0;

  // Throws Error{InvalidArgument} unless window_wall > 0.
  static RtfSample from_windows(double sim_seconds, double wall_seconds);
};

// Hover-and-orbit workload: the swarm takes off to 1 m and every drone then
// chases a point orbiting its spawn position (r = 0.5 m, 0.5 rad/s). Each tick
// also builds the telemetry frame and the pairwise separation check that the
// station performs, so cost grows with n the same way it does when serving.
RtfSample measure_rtf(int n_drones, double sim_duration, const SimConfig& config = {});

struct BenchRow {
  int n_drones = 0;
  double rtf_median = 0.0;
  double rtf_min = 0.0;
  double rtf_max = 0.0;
  int runs = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;  // ascending n_drones
};

BenchRow summarize(int n_drones, std::span<const RtfSample> samples);
BenchReport run_bench(std::span<const int> drone_counts, double sim_duration, int runs,
                      const SimConfig& config = {});

// "n,rtf_median,rtf_min,rtf_max,runs" header plus one row per entry, reals
// fixed to four decimals.
std::string to_csv(const BenchReport& report);

}  // namespace sib::sim
