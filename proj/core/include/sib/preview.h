#pragma once

#include <stop_token>
#include <vector>

#include "sib/interpreter.h"
#include "sib/simulator.h"
#include "sib/trace.h"

namespace sib::sim {

struct PreviewOptions {
  SimConfig sim;
  double spacing = 1.0;
  // Answers consumed in order by Prompt blocks (and the run confirmation).
  std::vector<double> answers;
  // Guard for programs that never terminate.
  double max_sim_time = 3600.0;
  // Receives every topic message the execution publishes.
  TopicPublisher* topics = nullptr;
  std::stop_token cancel;
};

// Runs a program on a private simulator as fast as possible, recording one
// entry per tick (plus the initial snapshot). Runtime errors end the trace
// with status Errored and the error text.
Trace preview_run(const blocks::BlockProgram& program, const blocks::RuntimeParams& params, int n,
                  const PreviewOptions& options = {});

}  // namespace sib::sim
