#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sib/interpreter.h"
#include "sib/program_store.h"
#include "sib/simulator.h"
#include "sib/topic_bus.h"
#include "sib/trace.h"

namespace sib::station {

using geom::Vec3;

// Closed axis-aligned box; points on the boundary are inside.
struct SafeArea {
  Vec3 min;
  Vec3 max;
  bool enabled = false;

  bool contains(Vec3 p) const;
  // Throws Error{InvalidArgument} when enabled and min > max on any axis.
  void validate() const;
};

// Tracks violation episodes per drone. An episode starts when an airborne
// drone is seen outside the area and ends once it is back inside or landed.
class SafeAreaGuard {
 public:
  struct Outcome {
    std::vector<sim::Command> commands;  // Land for every airborne drone outside
    std::vector<int> new_violations;     // drones starting a new episode
  };

  Outcome enforce(std::span<const sim::DroneState> states, const SafeArea& area);
  void reset() { in_episode_.clear(); }

 private:
  std::set<int> in_episode_;
};

struct ServiceResult {
  bool ok = true;
  nlohmann::json payload = nlohmann::json::object();

  static ServiceResult failure(std::string reason, std::string code = "");
};

struct StationConfig {
  int drones = 4;
  double spacing = 1.0;
  sim::SimConfig sim;
  std::filesystem::path program_dir = "programs";
  blocks::RuntimeParams params;
  int telemetry_every_ticks = 2;  // 10 Hz at the default 50 ms tick
  std::size_t max_traces = 16;
};

const std::vector<std::string>& service_names();

// The control plane without any network: one simulator, one program runner,
// topic bus, safe-area guard and program store. Every mutation runs on the
// tick thread; call()/publish_manual() from other threads are queued.
//
// Without start_realtime() the owner drives step() itself and calls execute
// synchronously on the caller's thread.
class Station {
 public:
  using Callback = std::function<void(ServiceResult)>;

  explicit Station(StationConfig config);
  ~Station();

  Station(const Station&) = delete;
  Station& operator=(const Station&) = delete;

  void call_async(std::string service, nlohmann::json payload, Callback done);
  std::future<ServiceResult> call(std::string service, nlohmann::json payload = nlohmann::json::object());
  // FPV manual_cmd publish path.
  void publish_manual_async(nlohmann::json payload, Callback done);
  std::future<ServiceResult> publish_manual(nlohmann::json payload);

  void step();
  void start_realtime();
  void stop_realtime();
  bool realtime() const { return running_.load(); }
  // Lands every drone and steps (without pacing) until all are down or the
  // simulated budget runs out. Returns true when all drones landed.
  bool land_and_settle(double max_sim_seconds = 120.0);

  TopicBus& bus() { return bus_; }
  sim::Snapshot snapshot() const;
  std::optional<std::string> trace_jsonl(const std::string& run_id) const;
  std::vector<std::string> program_names() const;
  std::string program_bytes(const std::string& name) const;
  blocks::ExecutionState execution_state() const;
  const StationConfig& config() const { return config_; }

 private:
  struct Task {
    std::function<void()> fn;
  };
  // Holds topic messages published while a service executes so the caller
  // sees its response before the events the call caused.
  class Gate final : public TopicPublisher {
   public:
    explicit Gate(TopicBus& bus) : bus_(bus) {}
    void publish(std::string_view topic, const nlohmann::json& payload) override;
    void hold() { holding_ = true; }
    void release();

   private:
    TopicBus& bus_;
    bool holding_ = false;
    std::vector<std::pair<std::string, nlohmann::json>> held_;
  };
  struct LiveTrace {
    std::string run_id;
    sim::Trace trace;
  };

  void post(std::function<void()> fn);
  void drain();
  ServiceResult execute(const std::string& service, const nlohmann::json& payload);
  ServiceResult do_run(const nlohmann::json& payload);
  ServiceResult do_land_all();
  ServiceResult do_set_safe_area(const nlohmann::json& payload);
  ServiceResult do_set_params(const nlohmann::json& payload);
  ServiceResult do_spawn(const nlohmann::json& payload);
  ServiceResult do_manual(const nlohmann::json& payload);
  nlohmann::json topics_json() const;
  void finish_trace_if_done();
  void publish_telemetry(const sim::Snapshot& s);

  StationConfig config_;
  TopicBus bus_;
  Gate gate_{bus_};
  blocks::ProgramStore store_;
  std::unique_ptr<sim::Simulator> sim_;
  blocks::ProgramRunner runner_;
  SafeAreaGuard guard_;
  SafeArea area_;
  blocks::RuntimeParams params_;

  std::optional<LiveTrace> live_trace_;
  std::deque<LiveTrace> traces_;
  std::uint64_t run_counter_ = 0;
  mutable std::mutex traces_mutex_;

  std::mutex queue_mutex_;
  std::deque<Task> queue_;

  mutable std::mutex sim_mutex_;  // guards sim_ replacement (spawn)
  std::atomic<bool> running_{false};
  std::thread loop_;
};

}  // namespace sib::station
