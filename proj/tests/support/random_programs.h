#pragma once

#include <deque>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "sib/program.h"

namespace gen {

// A valid document over every block kind. Structure only: it may navigate
// drones that do not exist or read variables before they are set.
nlohmann::json random_document(std::mt19937_64& rng, int max_depth = 3);

// JSON text with object keys in random order and optional whitespace.
std::string shuffled_dump(const nlohmann::json& j, std::mt19937_64& rng);

// Programs that terminate without touching the swarm: control flow,
// variables, short waits, LED effects, prompts with answers supplied.
struct Runnable {
  sib::blocks::BlockProgram program;
  std::deque<double> answers;
};
Runnable random_runnable(std::mt19937_64& rng);

}  // namespace gen
