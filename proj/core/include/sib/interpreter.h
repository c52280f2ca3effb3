#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sib/geometry.h"
#include "sib/program.h"
#include "sib/simulator.h"
#include "sib/topics.h"

namespace sib::blocks {

enum class ExecStatus { Idle, Running, Prompting, Stopping, Done, Errored };

std::string_view to_string(ExecStatus s);

struct RuntimeParams {
  double nav_tolerance = 0.2;   // m
  double yaw_tolerance = 0.1;   // rad
  bool confirm_before_run = false;
  double block_timeout = 60.0;  // s, swarm operations only

  // Throws Error{InvalidArgument}.
  void validate() const;
};

struct ExecutionState {
  ExecStatus status = ExecStatus::Idle;
  std::optional<std::string> current_block;
  std::map<std::string, double> variables;
  std::optional<std::string> error_message;
};

inline constexpr int kMaxCallDepth = 32;
// Instant blocks executed per advance() before yielding to the next tick.
inline constexpr int kMaxStepsPerTick = 100000;

// One execution of a program. The interpreter never touches drone state
// directly: it reads the snapshot handed to advance() and sends commands.
// advance() must be called from a single driver thread; request_stop() and
// answer_prompt() may be called from any thread and take effect at the next
// advance().
class Interpreter {
 public:
  Interpreter(BlockProgram program, RuntimeParams params, TopicPublisher& topics);

  // Publishes running=true and enters Running (or Prompting when
  // confirm_before_run is set).
  void start(const sim::Snapshot& snapshot);
  void advance(const sim::Snapshot& snapshot, sim::CommandSink& swarm);

  void request_stop();
  void answer_prompt(double value);

  ExecutionState state() const;
  ExecStatus status() const;
  bool finished() const;
  const BlockProgram& program() const { return program_; }

 private:
  enum class WaitKind { Sleep, Prompt, Confirm, Altitude, Landed, Targets };
  struct Wait {
    WaitKind kind = WaitKind::Sleep;
    double until = 0.0;  // Sleep end or swarm-operation deadline
    std::string block_id;
    std::string var;
    double altitude = 0.0;
    std::vector<sim::cmd::Target> targets;
  };
  struct Frame {
    const std::vector<Block>* body = nullptr;
    std::size_t pc = 0;
    const Block* owner = nullptr;  // nullptr for the root sequence
    std::int64_t remaining = 0;    // Repeat iterations left
  };

  void run_until_wait(const sim::Snapshot& snapshot, sim::CommandSink& swarm);
  void execute(const Block& b, const sim::Snapshot& snapshot, sim::CommandSink& swarm);
  void end_of_frame();
  bool wait_satisfied(const sim::Snapshot& snapshot) const;
  void publish_block(const Block& b);
  // hold: command Hover so moving drones stop where they are (stop and errors).
  void finish(ExecStatus terminal, sim::CommandSink& swarm, bool hold = true);
  void fail(const std::string& message, const std::string& block_id, sim::CommandSink& swarm);

  double number(const Block& b, std::string_view key) const;
  std::int64_t integer(const Block& b, std::string_view key) const;
  double operand(const Operand& o) const;
  bool evaluate(const Condition& c) const;
  void start_swarm_wait(const Block& b, const sim::Snapshot& snapshot, WaitKind kind);
  void send_formation(const Block& b, const sim::Snapshot& snapshot, sim::CommandSink& swarm);

  BlockProgram program_;
  RuntimeParams params_;
  TopicPublisher& topics_;
  std::map<std::string, const Block*> procedures_;

  std::vector<Frame> frames_;
  std::vector<std::string> call_stack_;
  std::optional<Wait> wait_;
  std::optional<geom::Formation> formation_;
  std::vector<int> drone_of_slot_;

  mutable std::mutex mutex_;  // guards state_ and the inbox below
  ExecutionState state_;
  bool stop_requested_ = false;
  std::optional<double> answer_;
};

// Enforces the single-program rule and drives the active execution.
class ProgramRunner {
 public:
  // Throws Error{AlreadyRunning} while another execution is active.
  std::shared_ptr<Interpreter> run(BlockProgram program, RuntimeParams params, TopicPublisher& topics,
                                   const sim::Snapshot& snapshot);
  // Throws Error{NotRunning} when nothing is active.
  void stop();
  // Throws Error{NotPrompting}.
  void answer_prompt(double value);
  void advance(const sim::Snapshot& snapshot, sim::CommandSink& swarm);

  bool active() const;
  std::shared_ptr<Interpreter> current() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<Interpreter> current_;
};

}  // namespace sib::blocks
