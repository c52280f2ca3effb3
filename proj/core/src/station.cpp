#include "sib/station.h"

#include <chrono>
#include <cmath>

#include "sib/error.h"

namespace sib::station {
namespace {

using nlohmann::json;

void require_keys(const json& payload, std::initializer_list<std::string_view> allowed) {
  if (!payload.is_object()) throw Error(Errc::InvalidArgument, "payload must be an object");
  for (const auto& [key, _] : payload.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw Error(Errc::InvalidArgument, "unknown field '" + key + "'");
  }
}

double number_field(const json& payload, const char* key) {
  if (!payload.contains(key) || !payload[key].is_number()) {
    throw Error(Errc::InvalidArgument, std::string("field '") + key + "' must be a number");
  }
  const double v = payload[key].get<double>();
  if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, std::string("field '") + key + "' must be finite");
  return v;
}

std::string string_field(const json& payload, const char* key) {
  if (!payload.contains(key) || !payload[key].is_string()) {
    throw Error(Errc::InvalidArgument, std::string("field '") + key + "' must be a string");
  }
  return payload[key].get<std::string>();
}

Vec3 vec_field(const json& payload, const char* key) {
  if (!payload.contains(key)) throw Error(Errc::InvalidArgument, std::string("missing field '") + key + "'");
  const json& v = payload[key];
  require_keys(v, {"x", "y", "z"});
  return {number_field(v, "x"), number_field(v, "y"), number_field(v, "z")};
}

json vec_json(Vec3 v) { return {{"x", v.x}, {"y", v.y}, {"z", v.z}}; }

json area_json(const SafeArea& a) { return {{"min", vec_json(a.min)}, {"max", vec_json(a.max)}, {"enabled", a.enabled}}; }

json params_json(const blocks::RuntimeParams& p, double d_safe) {
  return {{"nav_tolerance", p.nav_tolerance},
          {"yaw_tolerance", p.yaw_tolerance},
          {"confirm_before_run", p.confirm_before_run},
          {"block_timeout", p.block_timeout},
          {"d_safe", d_safe}};
}

}  // namespace

bool SafeArea::contains(Vec3 p) const {
  return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
}

void SafeArea::validate() const {
  if (!min.finite() || !max.finite()) throw Error(Errc::InvalidArgument, "safe area bounds must be finite");
  if (enabled && (min.x > max.x || min.y > max.y || min.z > max.z)) {
    throw Error(Errc::InvalidArgument, "safe area min must not exceed max");
  }
}

SafeAreaGuard::Outcome SafeAreaGuard::enforce(std::span<const sim::DroneState> states, const SafeArea& area) {
  Outcome out;
  if (!area.enabled) {
    in_episode_.clear();
    return out;
  }
  for (const auto& d : states) {
    const bool outside = !area.contains(d.pose.position);
    if (!outside || d.mode == sim::FlightMode::Landed) {
      in_episode_.erase(d.id);
      continue;
    }
    if (in_episode_.insert(d.id).second) out.new_violations.push_back(d.id);
    if (d.mode != sim::FlightMode::Landing) out.commands.emplace_back(sim::cmd::Land{d.id});
  }
  return out;
}

ServiceResult ServiceResult::failure(std::string reason, std::string code) {
  ServiceResult r;
  r.ok = false;
  r.payload = {{"reason", std::move(reason)}};
  if (!code.empty()) r.payload["code"] = std::move(code);
  return r;
}

const std::vector<std::string>& service_names() {
  static const std::vector<std::string> names{"run",      "stop",          "store",         "load",
                                              "list_programs", "land_all", "set_safe_area", "get_safe_area",
                                              "list_topics",   "spawn",    "answer_prompt", "set_params"};
  return names;
}

void Station::Gate::publish(std::string_view topic, const nlohmann::json& payload) {
  if (holding_) {
    held_.emplace_back(std::string(topic), payload);
  } else {
    bus_.publish(topic, payload);
  }
}

void Station::Gate::release() {
  holding_ = false;
  auto held = std::move(held_);
  held_.clear();
  for (const auto& [topic, payload] : held) bus_.publish(topic, payload);
}

Station::Station(StationConfig config)
    : config_(std::move(config)),
      store_(config_.program_dir),
      sim_(std::make_unique<sim::Simulator>(config_.sim, config_.drones, config_.spacing)),
      params_(config_.params) {
  params_.validate();
  if (config_.telemetry_every_ticks < 1) throw Error(Errc::InvalidArgument, "telemetry period must be >= 1 tick");
  bus_.register_topic(std::string(topic::kRunning), "bool", 1);
  bus_.register_topic(std::string(topic::kBlock), "string", 1);
  bus_.register_topic(std::string(topic::kError), "error", 2);
  bus_.register_topic(std::string(topic::kPrompt), "prompt", 1);
  bus_.register_topic(std::string(topic::kTelemetry), "telemetry", 1);
  bus_.register_topic(std::string(topic::kSafeAreaViolation), "safe_area_violation", 1);
  bus_.register_topic(std::string(topic::kSimEvent), "sim_event", 1);
  bus_.register_topic(std::string(topic::kManualCmd), "manual_cmd", 0);
}

Station::~Station() { stop_realtime(); }

void Station::post(std::function<void()> fn) {
  std::lock_guard lock(queue_mutex_);
  queue_.push_back({std::move(fn)});
}

void Station::drain() {
  std::deque<Task> tasks;
  {
    std::lock_guard lock(queue_mutex_);
    tasks.swap(queue_);
  }
  for (auto& t : tasks) t.fn();
}

void Station::call_async(std::string service, json payload, Callback done) {
  auto task = [this, service = std::move(service), payload = std::move(payload), done = std::move(done)]() {
    gate_.hold();
    ServiceResult result = execute(service, payload);
    if (done) done(std::move(result));
    gate_.release();
  };
  if (running_) {
    post(std::move(task));
  } else {
    task();
  }
}

std::future<ServiceResult> Station::call(std::string service, json payload) {
  auto promise = std::make_shared<std::promise<ServiceResult>>();
  auto future = promise->get_future();
  call_async(std::move(service), std::move(payload), [promise](ServiceResult r) { promise->set_value(std::move(r)); });
  return future;
}

void Station::publish_manual_async(json payload, Callback done) {
  auto task = [this, payload = std::move(payload), done = std::move(done)]() {
    ServiceResult result;
    try {
      result = do_manual(payload);
    } catch (const Error& e) {
      result = ServiceResult::failure(e.what(), std::string(to_string(e.code())));
    }
    if (done) done(std::move(result));
  };
  if (running_) {
    post(std::move(task));
  } else {
    task();
  }
}

std::future<ServiceResult> Station::publish_manual(json payload) {
  auto promise = std::make_shared<std::promise<ServiceResult>>();
  auto future = promise->get_future();
  publish_manual_async(std::move(payload), [promise](ServiceResult r) { promise->set_value(std::move(r)); });
  return future;
}

ServiceResult Station::execute(const std::string& service, const json& payload) {
  try {
    if (service == "run") return do_run(payload);
    if (service == "stop") {
      require_keys(payload, {});
      runner_.stop();
      return {};
    }
    if (service == "store") {
      require_keys(payload, {"name", "program"});
      if (!payload.contains("program")) throw Error(Errc::InvalidArgument, "missing field 'program'");
      const json& doc = payload["program"];
      const auto program = blocks::parse(doc.is_string() ? doc.get<std::string>() : doc.dump());
      return {true, {{"name", store_.store(string_field(payload, "name"), program)}}};
    }
    if (service == "load") {
      require_keys(payload, {"name"});
      const std::string name = string_field(payload, "name");
      const auto program = store_.load(name);
      return {true, {{"name", name}, {"program", json::parse(blocks::serialize(program))}}};
    }
    if (service == "list_programs") {
      require_keys(payload, {});
      return {true, {{"programs", store_.list()}}};
    }
    if (service == "land_all") {
      require_keys(payload, {});
      return do_land_all();
    }
    if (service == "set_safe_area") return do_set_safe_area(payload);
    if (service == "get_safe_area") {
      require_keys(payload, {});
      return {true, area_json(area_)};
    }
    if (service == "list_topics") {
      require_keys(payload, {});
      return {true, {{"topics", topics_json()}}};
    }
    if (service == "spawn") return do_spawn(payload);
    if (service == "answer_prompt") {
      require_keys(payload, {"value"});
      runner_.answer_prompt(number_field(payload, "value"));
      return {};
    }
    if (service == "set_params") return do_set_params(payload);
  } catch (const Error& e) {
    return ServiceResult::failure(e.what(), std::string(to_string(e.code())));
  } catch (const json::exception& e) {
    return ServiceResult::failure(e.what(), "InvalidArgument");
  }
  return ServiceResult::failure("unknown service", "UnknownService");
}

ServiceResult Station::do_run(const json& payload) {
  require_keys(payload, {"name", "program"});
  if (payload.contains("name") == payload.contains("program")) {
    throw Error(Errc::InvalidArgument, "run needs exactly one of 'name' or 'program'");
  }
  if (runner_.active()) throw Error(Errc::AlreadyRunning, "a program is already running");
  blocks::BlockProgram program;
  if (payload.contains("name")) {
    program = store_.load(string_field(payload, "name"));
  } else {
    const json& doc = payload["program"];
    program = blocks::parse(doc.is_string() ? doc.get<std::string>() : doc.dump());
  }
  const sim::Snapshot snap = sim_->snapshot();
  runner_.run(std::move(program), params_, gate_, snap);

  const std::string run_id = "run-" + std::to_string(++run_counter_);
  LiveTrace live{run_id, {}};
  live.trace.entries.push_back({snap.sim_time(), std::nullopt, snap.drones});
  live_trace_ = std::move(live);
  return {true, {{"run_id", run_id}}};
}

ServiceResult Station::do_land_all() {
  bool stopped = false;
  if (runner_.active()) {
    try {
      runner_.stop();
      stopped = true;
    } catch (const Error&) {
    }
  }
  sim_->send(sim::cmd::LandAll{});
  return {true, {{"stopped", stopped}}};
}

ServiceResult Station::do_set_safe_area(const json& payload) {
  require_keys(payload, {"min", "max", "enabled"});
  SafeArea area;
  area.min = vec_field(payload, "min");
  area.max = vec_field(payload, "max");
  area.enabled = true;
  if (payload.contains("enabled")) {
    if (!payload["enabled"].is_boolean()) throw Error(Errc::InvalidArgument, "field 'enabled' must be a boolean");
    area.enabled = payload["enabled"].get<bool>();
  }
  area.validate();
  area_ = area;
  guard_.reset();
  return {true, area_json(area_)};
}

ServiceResult Station::do_set_params(const json& payload) {
  require_keys(payload, {"nav_tolerance", "yaw_tolerance", "confirm_before_run", "block_timeout", "d_safe"});
  blocks::RuntimeParams next = params_;
  double d_safe = sim_->config().d_safe;
  if (payload.contains("nav_tolerance")) next.nav_tolerance = number_field(payload, "nav_tolerance");
  if (payload.contains("yaw_tolerance")) next.yaw_tolerance = number_field(payload, "yaw_tolerance");
  if (payload.contains("block_timeout")) next.block_timeout = number_field(payload, "block_timeout");
  if (payload.contains("confirm_before_run")) {
    if (!payload["confirm_before_run"].is_boolean()) {
      throw Error(Errc::InvalidArgument, "field 'confirm_before_run' must be a boolean");
    }
    next.confirm_before_run = payload["confirm_before_run"].get<bool>();
  }
  if (payload.contains("d_safe")) {
    d_safe = number_field(payload, "d_safe");
    if (!(d_safe > 0.0)) throw Error(Errc::InvalidArgument, "d_safe must be positive");
  }
  next.validate();
  params_ = next;
  config_.sim.d_safe = d_safe;
  sim_->set_safe_distance(d_safe);
  return {true, params_json(params_, d_safe)};
}

ServiceResult Station::do_spawn(const json& payload) {
  require_keys(payload, {"n", "spacing"});
  if (!payload.contains("n") || !payload["n"].is_number_integer()) {
    throw Error(Errc::InvalidCount, "field 'n' must be an integer");
  }
  if (runner_.active()) throw Error(Errc::AlreadyRunning, "cannot respawn while a program is running");
  const int n = payload["n"].get<int>();
  const double spacing = payload.contains("spacing") ? number_field(payload, "spacing") : config_.spacing;
  auto fresh = std::make_unique<sim::Simulator>(config_.sim, n, spacing);
  {
    std::lock_guard lock(sim_mutex_);
    sim_ = std::move(fresh);
  }
  config_.drones = n;
  config_.spacing = spacing;
  guard_.reset();
  return {true, {{"drones", n}}};
}

ServiceResult Station::do_manual(const json& payload) {
  require_keys(payload, {"drone", "vx", "vy", "vz", "yaw_rate", "frame"});
  if (!payload.contains("drone") || !payload["drone"].is_number_integer()) {
    throw Error(Errc::InvalidArgument, "field 'drone' must be an integer");
  }
  sim::cmd::ManualVelocity cmd;
  cmd.drone = payload["drone"].get<int>();
  Vec3 v{number_field(payload, "vx"), number_field(payload, "vy"), number_field(payload, "vz")};
  cmd.yaw_rate = payload.contains("yaw_rate") ? number_field(payload, "yaw_rate") : 0.0;
  const std::string frame = payload.contains("frame") ? string_field(payload, "frame") : "world";
  if (frame != "world" && frame != "body") throw Error(Errc::InvalidArgument, "frame must be 'world' or 'body'");
  if (frame == "body") {
    const auto snap = sim_->snapshot();
    if (cmd.drone < 0 || cmd.drone >= static_cast<int>(snap.drones.size())) {
      throw Error(Errc::UnknownDrone, "no drone with id " + std::to_string(cmd.drone));
    }
    const double yaw = snap.drones[static_cast<std::size_t>(cmd.drone)].pose.yaw;
    v = {std::cos(yaw) * v.x - std::sin(yaw) * v.y, std::sin(yaw) * v.x + std::cos(yaw) * v.y, v.z};
  }
  cmd.velocity = v;
  sim_->send(cmd);
  bus_.publish(topic::kManualCmd, payload);
  return {};
}

json Station::topics_json() const {
  json out = json::array();
  for (const auto& t : bus_.list()) {
    out.push_back({{"name", t.name},
                   {"message_kind", t.message_kind},
                   {"publisher_count", t.publisher_count},
                   {"last_publish_sim_time", t.last_publish_sim_time ? json(*t.last_publish_sim_time) : json(nullptr)},
                   {"publish_count", t.publish_count}});
  }
  return out;
}

void Station::finish_trace_if_done() {
  if (!live_trace_ || runner_.active()) return;
  const auto exec = runner_.current();
  const auto state = exec ? exec->state() : blocks::ExecutionState{};
  live_trace_->trace.status = state.status;
  live_trace_->trace.error = state.error_message;
  std::lock_guard lock(traces_mutex_);
  traces_.push_back(std::move(*live_trace_));
  live_trace_.reset();
  while (traces_.size() > config_.max_traces) traces_.pop_front();
}

void Station::publish_telemetry(const sim::Snapshot& s) {
  json drones = json::array();
  for (const auto& d : s.drones) {
    drones.push_back({{"id", d.id},
                      {"x", d.pose.position.x},
                      {"y", d.pose.position.y},
                      {"z", d.pose.position.z},
                      {"yaw", d.pose.yaw},
                      {"vx", d.velocity.x},
                      {"vy", d.velocity.y},
                      {"vz", d.velocity.z},
                      {"mode", std::string(sim::to_string(d.mode))},
                      {"r", d.led.r},
                      {"g", d.led.g},
                      {"b", d.led.b},
                      {"battery", d.battery},
                      {"cpu", d.cpu}});
  }
  bus_.publish(topic::kTelemetry, json{{"t", s.sim_time()}, {"tick", s.clock.tick_count}, {"drones", std::move(drones)}});
}

void Station::step() {
  drain();
  sim::Simulator& sim = *sim_;
  runner_.advance(sim.snapshot(), sim);
  finish_trace_if_done();
  std::optional<std::string> block;
  if (auto exec = runner_.current(); exec && live_trace_) block = exec->state().current_block;

  const auto events = sim.tick();
  const sim::Snapshot snap = sim.snapshot();
  bus_.set_sim_time(snap.sim_time());
  if (live_trace_) live_trace_->trace.entries.push_back({snap.sim_time(), std::move(block), snap.drones});

  const auto outcome = guard_.enforce(snap.drones, area_);
  for (const auto& c : outcome.commands) sim.send(c);
  for (int id : outcome.new_violations) {
    const auto& p = snap.drones[static_cast<std::size_t>(id)].pose.position;
    bus_.publish(topic::kSafeAreaViolation, json{{"drone", id}, {"position", vec_json(p)}, {"t", snap.sim_time()}});
  }
  for (const auto& e : events) {
    bus_.publish(topic::kSimEvent, json{{"drone", e.drone}, {"kind", std::string(sim::to_string(e.kind))}});
  }
  if (snap.clock.tick_count % config_.telemetry_every_ticks == 0) publish_telemetry(snap);
}

void Station::start_realtime() {
  if (running_.exchange(true)) return;
  loop_ = std::thread([this] {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(config_.sim.tick_dt));
    auto next = clock::now();
    while (running_) {
      step();
      next += period;
      const auto now = clock::now();
      if (next < now - std::chrono::seconds(1)) next = now;  // fell far behind; do not spiral
      std::this_thread::sleep_until(next);
    }
  });
}

void Station::stop_realtime() {
  if (!running_.exchange(false)) return;
  if (loop_.joinable()) loop_.join();
  drain();
}

bool Station::land_and_settle(double max_sim_seconds) {
  stop_realtime();
  do_land_all();
  const double deadline = sim_->clock().sim_time() + max_sim_seconds;
  auto all_landed = [this] {
    const auto snap = sim_->snapshot();
    for (const auto& d : snap.drones) {
      if (d.mode != sim::FlightMode::Landed) return false;
    }
    return true;
  };
  while (!all_landed() && sim_->clock().sim_time() < deadline) step();
  return all_landed();
}

sim::Snapshot Station::snapshot() const {
  std::lock_guard lock(sim_mutex_);
  return sim_->snapshot();
}

std::optional<std::string> Station::trace_jsonl(const std::string& run_id) const {
  std::lock_guard lock(traces_mutex_);
  for (const auto& t : traces_) {
    if (t.run_id == run_id) return sim::to_jsonl(t.trace);
  }
  return std::nullopt;
}

std::vector<std::string> Station::program_names() const { return store_.list(); }

std::string Station::program_bytes(const std::string& name) const { return store_.load_bytes(name); }

blocks::ExecutionState Station::execution_state() const {
  const auto exec = runner_.current();
  return exec ? exec->state() : blocks::ExecutionState{};
}

}  // namespace sib::station
