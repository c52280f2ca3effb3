#pragma once

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sib/drone.h"
#include "sib/interpreter.h"

namespace sib::sim {

struct TraceEntry {
  double sim_time = 0.0;
  std::optional<std::string> block_id;
  std::vector<DroneState> drones;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct Trace {
  std::vector<TraceEntry> entries;
  blocks::ExecStatus status = blocks::ExecStatus::Done;
  std::optional<std::string> error;  // terminal runtime error, if any
};

// JSON lines: {"t","block","drones":[{"id","x","y","z","yaw","mode","r","g","b","battery"}]}.
// The final line additionally carries "status" and, on failure, "error".
std::string to_jsonl(const Trace& trace);
void write_jsonl(const Trace& trace, std::ostream& out);
// Throws Error{SyntaxError} on malformed input.
Trace read_jsonl(std::istream& in);

// Step-by-step navigation over a recorded trace; the index is clamped.
class TraceCursor {
 public:
  explicit TraceCursor(const Trace& trace) : trace_(&trace) {}

  std::size_t index() const { return index_; }
  const TraceEntry& current() const { return trace_->entries.at(index_); }
  bool at_end() const { return index_ + 1 >= trace_->entries.size(); }
  void next() {
    if (!at_end()) ++index_;
  }
  void previous() {
    if (index_ > 0) --index_;
  }
  void seek(std::size_t i) { index_ = trace_->entries.empty() ? 0 : std::min(i, trace_->entries.size() - 1); }

 private:
  const Trace* trace_;
  std::size_t index_ = 0;
};

}  // namespace sib::sim
