#include "sib/interpreter.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "sib/error.h"

namespace sib::blocks {
namespace {

using nlohmann::json;

void collect_procedures(const std::vector<Block>& blocks, std::map<std::string, const Block*>& out) {
  for (const auto& b : blocks) {
    if (b.kind == BlockKind::Define) out[std::get<std::string>(b.params.at("name"))] = &b;
    for (const auto& [slot, children] : b.children) collect_procedures(children, out);
  }
}

bool active_status(ExecStatus s) { return s == ExecStatus::Running || s == ExecStatus::Prompting; }

}  // namespace

std::string_view to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::Idle: return "idle";
    case ExecStatus::Running: return "running";
    case ExecStatus::Prompting: return "prompting";
    case ExecStatus::Stopping: return "stopping";
    case ExecStatus::Done: return "done";
    case ExecStatus::Errored: return "errored";
  }
  return "idle";
}

void RuntimeParams::validate() const {
  if (!(nav_tolerance > 0.0) || !std::isfinite(nav_tolerance)) throw Error(Errc::InvalidArgument, "nav_tolerance must be positive");
  if (!(yaw_tolerance > 0.0) || !std::isfinite(yaw_tolerance)) throw Error(Errc::InvalidArgument, "yaw_tolerance must be positive");
  if (!(block_timeout > 0.0) || !std::isfinite(block_timeout)) throw Error(Errc::InvalidArgument, "block_timeout must be positive");
}

Interpreter::Interpreter(BlockProgram program, RuntimeParams params, TopicPublisher& topics)
    : program_(std::move(program)), params_(params), topics_(topics) {
  validate(program_);
  params_.validate();
  collect_procedures(program_.blocks, procedures_);
}

ExecutionState Interpreter::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

ExecStatus Interpreter::status() const {
  std::lock_guard lock(mutex_);
  return state_.status;
}

bool Interpreter::finished() const {
  const ExecStatus s = status();
  return s == ExecStatus::Done || s == ExecStatus::Errored;
}

void Interpreter::request_stop() {
  std::lock_guard lock(mutex_);
  if (!active_status(state_.status)) throw Error(Errc::NotRunning, "no program is running");
  stop_requested_ = true;
}

void Interpreter::answer_prompt(double value) {
  std::lock_guard lock(mutex_);
  if (state_.status != ExecStatus::Prompting || answer_) throw Error(Errc::NotPrompting, "no prompt is pending");
  if (!std::isfinite(value)) throw Error(Errc::InvalidArgument, "prompt answer must be finite");
  answer_ = value;
}

void Interpreter::start(const sim::Snapshot& snapshot) {
  {
    std::lock_guard lock(mutex_);
    if (state_.status != ExecStatus::Idle) throw Error(Errc::AlreadyRunning, "execution already started");
    state_.status = ExecStatus::Running;
  }
  topics_.publish(topic::kRunning, true);
  frames_.push_back({&program_.blocks, 0, nullptr, 0});
  if (params_.confirm_before_run) {
    Wait w;
    w.kind = WaitKind::Confirm;
    w.until = snapshot.sim_time();
    wait_ = w;
    {
      std::lock_guard lock(mutex_);
      state_.status = ExecStatus::Prompting;
      state_.current_block = "$confirm";
    }
    topics_.publish(topic::kPrompt, json{{"var", ""},
                                         {"message", "Run program '" + program_.name + "'? (nonzero to proceed)"},
                                         {"block", nullptr},
                                         {"confirm", true}});
  }
}

void Interpreter::finish(ExecStatus terminal, sim::CommandSink& swarm, bool hold) {
  if (hold) {
    try {
      swarm.send(sim::cmd::Hover{});
    } catch (const Error&) {
    }
  }
  frames_.clear();
  call_stack_.clear();
  wait_.reset();
  {
    std::lock_guard lock(mutex_);
    state_.status = terminal;
    state_.current_block.reset();
    stop_requested_ = false;
    answer_.reset();
  }
  topics_.publish(topic::kRunning, false);
}

void Interpreter::fail(const std::string& message, const std::string& block_id, sim::CommandSink& swarm) {
  topics_.publish(topic::kError, json{{"message", message}, {"block", block_id.empty() ? json(nullptr) : json(block_id)}});
  {
    std::lock_guard lock(mutex_);
    state_.error_message = message;
  }
  finish(ExecStatus::Errored, swarm);
}

void Interpreter::advance(const sim::Snapshot& snapshot, sim::CommandSink& swarm) {
  bool stop = false;
  std::optional<double> answer;
  ExecStatus status;
  {
    std::lock_guard lock(mutex_);
    status = state_.status;
    if (!active_status(status)) return;
    stop = stop_requested_;
    answer = answer_;
    answer_.reset();
  }

  if (stop) {
    {
      std::lock_guard lock(mutex_);
      state_.status = ExecStatus::Stopping;
    }
    finish(ExecStatus::Done, swarm);
    return;
  }

  if (status == ExecStatus::Prompting) {
    if (!answer) return;
    const Wait w = *wait_;
    wait_.reset();
    if (w.kind == WaitKind::Confirm && *answer == 0.0) {
      finish(ExecStatus::Done, swarm);
      return;
    }
    std::lock_guard lock(mutex_);
    if (w.kind == WaitKind::Prompt) {
      state_.variables[w.var] = *answer;
      state_.current_block = w.block_id;
    }
    state_.status = ExecStatus::Running;
  }

  if (wait_) {
    if (!wait_satisfied(snapshot)) {
      if (wait_->kind != WaitKind::Sleep && snapshot.sim_time() >= wait_->until) {
        fail("block '" + wait_->block_id + "' timed out after " + std::to_string(params_.block_timeout) + " s",
             wait_->block_id, swarm);
      }
      return;
    }
    wait_.reset();
  }
  run_until_wait(snapshot, swarm);
}

bool Interpreter::wait_satisfied(const sim::Snapshot& snapshot) const {
  const Wait& w = *wait_;
  switch (w.kind) {
    case WaitKind::Sleep:
      return snapshot.sim_time() >= w.until - 1e-9;
    case WaitKind::Prompt:
    case WaitKind::Confirm:
      return false;
    case WaitKind::Altitude:
      return std::all_of(snapshot.drones.begin(), snapshot.drones.end(), [&](const sim::DroneState& d) {
        return d.battery <= 0.0 || std::fabs(d.pose.position.z - w.altitude) <= params_.nav_tolerance;
      });
    case WaitKind::Landed:
      return std::all_of(snapshot.drones.begin(), snapshot.drones.end(),
                         [](const sim::DroneState& d) { return d.mode == sim::FlightMode::Landed; });
    case WaitKind::Targets:
      return std::all_of(w.targets.begin(), w.targets.end(), [&](const sim::cmd::Target& t) {
        const auto& d = snapshot.drones.at(static_cast<std::size_t>(t.drone));
        const bool close = geom::distance(d.pose.position, t.pose.position) <= params_.nav_tolerance &&
                           std::fabs(geom::normalize_yaw(d.pose.yaw - t.pose.yaw)) <= params_.yaw_tolerance;
        // The avoidance layer may have raised the goal; arrival then counts.
        const bool arrived = d.mode == sim::FlightMode::Hovering && !d.target;
        return close || arrived;
      });
  }
  return false;
}

void Interpreter::publish_block(const Block& b) {
  {
    std::lock_guard lock(mutex_);
    state_.current_block = b.id;
  }
  topics_.publish(topic::kBlock, b.id);
}

double Interpreter::operand(const Operand& o) const {
  if (const auto* i = std::get_if<std::int64_t>(&o)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&o)) return *d;
  const auto& name = std::get<std::string>(o);
  std::lock_guard lock(mutex_);
  auto it = state_.variables.find(name);
  if (it == state_.variables.end()) throw Error(Errc::InvalidArgument, "undefined variable '" + name + "'");
  return it->second;
}

double Interpreter::number(const Block& b, std::string_view key) const {
  const Param& p = b.params.at(std::string(key));
  if (const auto* i = std::get_if<std::int64_t>(&p)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&p)) return *d;
  return operand(std::get<std::string>(p));
}

std::int64_t Interpreter::integer(const Block& b, std::string_view key) const {
  return std::get<std::int64_t>(b.params.at(std::string(key)));
}

bool Interpreter::evaluate(const Condition& c) const {
  const double lhs = operand(c.lhs);
  const double rhs = operand(c.rhs);
  switch (c.op) {
    case CompareOp::Less: return lhs < rhs;
    case CompareOp::LessEqual: return lhs <= rhs;
    case CompareOp::Greater: return lhs > rhs;
    case CompareOp::GreaterEqual: return lhs >= rhs;
    case CompareOp::Equal: return lhs == rhs;
    case CompareOp::NotEqual: return lhs != rhs;
  }
  return false;
}

void Interpreter::start_swarm_wait(const Block& b, const sim::Snapshot& snapshot, WaitKind kind) {
  Wait w;
  w.kind = kind;
  w.block_id = b.id;
  w.until = snapshot.sim_time() + params_.block_timeout;
  wait_ = std::move(w);
}

void Interpreter::run_until_wait(const sim::Snapshot& snapshot, sim::CommandSink& swarm) {
  for (int step = 0; step < kMaxStepsPerTick; ++step) {
    if (frames_.empty()) {
      // Natural completion lets drones finish settling inside the block tolerance.
      finish(ExecStatus::Done, swarm, false);
      return;
    }
    Frame& frame = frames_.back();
    if (frame.pc >= frame.body->size()) {
      const Block* owner = frame.owner;
      try {
        end_of_frame();
      } catch (const Error& e) {
        fail(e.what(), owner ? owner->id : "", swarm);
        return;
      }
      continue;
    }
    const Block& b = (*frame.body)[frame.pc++];
    try {
      execute(b, snapshot, swarm);
    } catch (const Error& e) {
      fail(e.what(), b.id, swarm);
      return;
    }
    if (wait_) return;
  }
}

void Interpreter::end_of_frame() {
  Frame& frame = frames_.back();
  if (!frame.owner) {
    frames_.pop_back();
    return;
  }
  const Block& owner = *frame.owner;
  switch (owner.kind) {
    case BlockKind::Repeat:
      if (--frame.remaining > 0) {
        frame.pc = 0;
      } else {
        frames_.pop_back();
      }
      return;
    case BlockKind::While:
      if (evaluate(std::get<Condition>(owner.params.at("cond")))) {
        publish_block(owner);
        frame.pc = 0;
      } else {
        frames_.pop_back();
      }
      return;
    case BlockKind::Call:
      frames_.pop_back();
      call_stack_.pop_back();
      return;
    default:
      frames_.pop_back();
      return;
  }
}

void Interpreter::send_formation(const Block& b, const sim::Snapshot& snapshot, sim::CommandSink& swarm) {
  sim::cmd::SetTargets targets;
  targets.speed = snapshot.drones.empty() ? 1.0 : snapshot.drones.front().max_speed;
  for (std::size_t slot = 0; slot < formation_->slots.size(); ++slot) {
    targets.targets.push_back({drone_of_slot_[slot], formation_->slots[slot]});
  }
  swarm.send(targets);
  start_swarm_wait(b, snapshot, WaitKind::Targets);
  wait_->targets = std::move(targets.targets);
}

void Interpreter::execute(const Block& b, const sim::Snapshot& snapshot, sim::CommandSink& swarm) {
  if (b.kind != BlockKind::While) publish_block(b);

  switch (b.kind) {
    case BlockKind::Define:
      return;

    case BlockKind::SetVar: {
      const double value = number(b, "value");
      const auto& var = std::get<std::string>(b.params.at("var"));
      auto op = b.params.find("op");
      const bool add = op != b.params.end() && std::get<std::string>(op->second) == "add";
      std::lock_guard lock(mutex_);
      if (add) {
        auto it = state_.variables.find(var);
        if (it == state_.variables.end()) throw Error(Errc::InvalidArgument, "undefined variable '" + var + "'");
        it->second += value;
      } else {
        state_.variables[var] = value;
      }
      return;
    }

    case BlockKind::If: {
      const bool taken = evaluate(std::get<Condition>(b.params.at("cond")));
      frames_.push_back({&b.children.at(taken ? "body" : "else"), 0, &b, 0});
      return;
    }

    case BlockKind::Repeat: {
      const std::int64_t count = integer(b, "count");
      if (count > 0) frames_.push_back({&b.children.at("body"), 0, &b, count});
      return;
    }

    case BlockKind::While:
      if (evaluate(std::get<Condition>(b.params.at("cond")))) {
        publish_block(b);
        frames_.push_back({&b.children.at("body"), 0, &b, 0});
      }
      return;

    case BlockKind::Call: {
      const auto& name = std::get<std::string>(b.params.at("name"));
      if (std::find(call_stack_.begin(), call_stack_.end(), name) != call_stack_.end()) {
        throw Error(Errc::InvalidArgument, "recursive call to '" + name + "'");
      }
      if (static_cast<int>(call_stack_.size()) >= kMaxCallDepth) {
        throw Error(Errc::InvalidArgument, "call depth limit exceeded");
      }
      call_stack_.push_back(name);
      frames_.push_back({&procedures_.at(name)->children.at("body"), 0, &b, 0});
      return;
    }

    case BlockKind::Wait: {
      const double seconds = number(b, "seconds");
      if (!(seconds >= 0.0)) throw Error(Errc::InvalidArgument, "wait duration must be nonnegative");
      Wait w;
      w.kind = WaitKind::Sleep;
      w.block_id = b.id;
      w.until = snapshot.sim_time() + seconds;
      wait_ = std::move(w);
      return;
    }

    case BlockKind::Prompt: {
      Wait w;
      w.kind = WaitKind::Prompt;
      w.block_id = b.id;
      w.var = std::get<std::string>(b.params.at("var"));
      const std::string message = std::get<std::string>(b.params.at("message"));
      wait_ = w;
      {
        std::lock_guard lock(mutex_);
        state_.status = ExecStatus::Prompting;
      }
      topics_.publish(topic::kPrompt, json{{"var", w.var}, {"message", message}, {"block", b.id}, {"confirm", false}});
      return;
    }

    case BlockKind::LedEffect: {
      sim::EffectSpec spec;
      spec.effect = *sim::effect_from_string(std::get<std::string>(b.params.at("effect")));
      spec.group = *sim::group_from_string(std::get<std::string>(b.params.at("group")));
      spec.base_color = {static_cast<std::uint8_t>(integer(b, "r")), static_cast<std::uint8_t>(integer(b, "g")),
                         static_cast<std::uint8_t>(integer(b, "b"))};
      spec.rate = number(b, "rate");
      swarm.send(sim::cmd::SetLed{spec});
      return;
    }

    case BlockKind::TakeoffAll: {
      const double z = number(b, "z");
      swarm.send(sim::cmd::TakeoffAll{z});
      start_swarm_wait(b, snapshot, WaitKind::Altitude);
      wait_->altitude = z;
      return;
    }

    case BlockKind::LandAll:
      swarm.send(sim::cmd::LandAll{});
      start_swarm_wait(b, snapshot, WaitKind::Landed);
      return;

    case BlockKind::Navigate: {
      const auto drone = static_cast<int>(integer(b, "drone"));
      const geom::Vec3 goal{number(b, "x"), number(b, "y"), number(b, "z")};
      const double speed = number(b, "speed");
      swarm.send(sim::cmd::Navigate{drone, goal, std::nullopt, speed});
      start_swarm_wait(b, snapshot, WaitKind::Targets);
      if (drone != sim::kAllDrones) {
        const auto& d = snapshot.drones.at(static_cast<std::size_t>(drone));
        wait_->targets.push_back({drone, {goal, d.pose.yaw}});
      } else {
        geom::Vec3 center;
        for (const auto& d : snapshot.drones) center = center + d.pose.position;
        center = center * (1.0 / static_cast<double>(snapshot.drones.size()));
        for (const auto& d : snapshot.drones) {
          wait_->targets.push_back({d.id, {goal + (d.pose.position - center), d.pose.yaw}});
        }
      }
      return;
    }

    case BlockKind::ApplyFormation: {
      geom::FormationSpec spec;
      spec.kind = geom::formation_kind_from_string(std::get<std::string>(b.params.at("kind")));
      spec.n = static_cast<int>(integer(b, "n"));
      spec.size_param = number(b, "size");
      spec.altitude = number(b, "altitude");
      if (b.params.contains("height")) spec.height = number(b, "height");
      if (spec.n > static_cast<int>(snapshot.drones.size())) {
        throw Error(Errc::SizeMismatch, "formation needs " + std::to_string(spec.n) + " drones but the swarm has " +
                                            std::to_string(snapshot.drones.size()));
      }
      geom::Formation formation = geom::generate(spec);
      std::vector<geom::Vec3> current;
      for (int k = 0; k < spec.n; ++k) current.push_back(snapshot.drones[static_cast<std::size_t>(k)].pose.position);
      const geom::Assignment a = geom::assign(current, formation);
      drone_of_slot_.assign(formation.size(), 0);
      for (std::size_t drone = 0; drone < a.slot_of.size(); ++drone) {
        drone_of_slot_[a.slot_of[drone]] = static_cast<int>(drone);
      }
      formation_ = std::move(formation);
      send_formation(b, snapshot, swarm);
      return;
    }

    case BlockKind::Translate:
    case BlockKind::Rotate:
    case BlockKind::Scale: {
      if (!formation_) throw Error(Errc::InvalidArgument, "no formation has been applied yet");
      if (b.kind == BlockKind::Translate) {
        formation_ = geom::translate(*formation_, {number(b, "dx"), number(b, "dy"), number(b, "dz")});
      } else if (b.kind == BlockKind::Rotate) {
        formation_ = geom::rotate(*formation_, number(b, "angle"));
      } else {
        formation_ = geom::scale(*formation_, number(b, "factor"));
      }
      send_formation(b, snapshot, swarm);
      return;
    }
  }
}

std::shared_ptr<Interpreter> ProgramRunner::run(BlockProgram program, RuntimeParams params, TopicPublisher& topics,
                                                const sim::Snapshot& snapshot) {
  std::lock_guard lock(mutex_);
  if (current_ && !current_->finished()) throw Error(Errc::AlreadyRunning, "a program is already running");
  auto exec = std::make_shared<Interpreter>(std::move(program), params, topics);
  exec->start(snapshot);
  current_ = exec;
  return exec;
}

void ProgramRunner::stop() {
  auto exec = current();
  if (!exec) throw Error(Errc::NotRunning, "no program is running");
  exec->request_stop();
}

void ProgramRunner::answer_prompt(double value) {
  auto exec = current();
  if (!exec) throw Error(Errc::NotPrompting, "no prompt is pending");
  exec->answer_prompt(value);
}

void ProgramRunner::advance(const sim::Snapshot& snapshot, sim::CommandSink& swarm) {
  if (auto exec = current()) exec->advance(snapshot, swarm);
}

bool ProgramRunner::active() const {
  auto exec = current();
  return exec && !exec->finished();
}

std::shared_ptr<Interpreter> ProgramRunner::current() const {
  std::lock_guard lock(mutex_);
  return current_;
}

}  // namespace sib::blocks
