#include "sib/preview.h"

#include <deque>
#include <string>

#include "sib/error.h"

namespace sib::sim {
namespace {

class Recorder final : public TopicPublisher {
 public:
  explicit Recorder(TopicPublisher* forward) : forward_(forward) {}

  void publish(std::string_view topic, const nlohmann::json& payload) override {
    if (topic == topic::kError) error = payload.value("message", std::string("error"));
    if (forward_) forward_->publish(topic, payload);
  }

  std::optional<std::string> error;

 private:
  TopicPublisher* forward_;
};

TraceEntry entry_of(const Snapshot& s, std::optional<std::string> block) {
  return {s.sim_time(), std::move(block), s.drones};
}

}  // namespace

Trace preview_run(const blocks::BlockProgram& program, const blocks::RuntimeParams& params, int n,
                  const PreviewOptions& options) {
  Simulator sim(options.sim, n, options.spacing);
  Recorder recorder(options.topics);
  blocks::Interpreter exec(program, params, recorder);
  std::deque<double> answers(options.answers.begin(), options.answers.end());

  Trace trace;
  trace.entries.push_back(entry_of(sim.snapshot(), std::nullopt));
  exec.start(sim.snapshot());

  std::optional<std::string> driver_error;
  while (true) {
    if (exec.status() == blocks::ExecStatus::Prompting) {
      if (answers.empty()) {
        driver_error = "prompt left unanswered during preview";
        exec.request_stop();
      } else {
        exec.answer_prompt(answers.front());
        answers.pop_front();
      }
    }
    if (!driver_error && options.cancel.stop_requested() && !exec.finished()) {
      driver_error = "preview cancelled";
      exec.request_stop();
    }
    if (!driver_error && sim.clock().sim_time() >= options.max_sim_time && !exec.finished()) {
      driver_error = "preview exceeded " + std::to_string(options.max_sim_time) + " s of simulated time";
      exec.request_stop();
    }

    exec.advance(sim.snapshot(), sim);
    if (exec.finished()) break;
    auto block = exec.state().current_block;
    sim.tick();
    trace.entries.push_back(entry_of(sim.snapshot(), std::move(block)));
  }

  if (driver_error) {
    trace.status = blocks::ExecStatus::Errored;
    trace.error = driver_error;
  } else {
    trace.status = exec.status();
    if (trace.status == blocks::ExecStatus::Errored) trace.error = recorder.error;
  }
  return trace;
}

}  // namespace sib::sim
