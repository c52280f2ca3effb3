#include "sib/trace.h"

#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sib/error.h"

namespace sib::sim {
namespace {

using nlohmann::json;

json drone_to_json(const DroneState& d) {
  return {{"id", d.id},
          {"x", d.pose.position.x},
          {"y", d.pose.position.y},
          {"z", d.pose.position.z},
          {"yaw", d.pose.yaw},
          {"mode", std::string(to_string(d.mode))},
          {"r", d.led.r},
          {"g", d.led.g},
          {"b", d.led.b},
          {"battery", d.battery}};
}

DroneState drone_from_json(const json& j) {
  DroneState d;
  d.id = j.at("id").get<int>();
  d.pose.position = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
  d.pose.yaw = j.at("yaw").get<double>();
  const auto mode = flight_mode_from_string(j.at("mode").get<std::string>());
  if (!mode) throw Error(Errc::SyntaxError, "unknown flight mode in trace");
  d.mode = *mode;
  d.led = {j.at("r").get<std::uint8_t>(), j.at("g").get<std::uint8_t>(), j.at("b").get<std::uint8_t>()};
  d.battery = j.at("battery").get<double>();
  return d;
}

}  // namespace

void write_jsonl(const Trace& trace, std::ostream& out) {
  for (std::size_t i = 0; i < trace.entries.size(); ++i) {
    const auto& e = trace.entries[i];
    json line{{"t", e.sim_time}, {"block", e.block_id ? json(*e.block_id) : json(nullptr)}};
    json drones = json::array();
    for (const auto& d : e.drones) drones.push_back(drone_to_json(d));
    line["drones"] = std::move(drones);
    if (i + 1 == trace.entries.size()) {
      line["status"] = std::string(blocks::to_string(trace.status));
      if (trace.error) line["error"] = *trace.error;
    }
    out << line.dump() << '\n';
  }
}

std::string to_jsonl(const Trace& trace) {
  std::ostringstream out;
  write_jsonl(trace, out);
  return out.str();
}

Trace read_jsonl(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      TraceEntry e;
      e.sim_time = j.at("t").get<double>();
      if (!j.at("block").is_null()) e.block_id = j.at("block").get<std::string>();
      for (const auto& d : j.at("drones")) e.drones.push_back(drone_from_json(d));
      if (!trace.entries.empty() && e.sim_time < trace.entries.back().sim_time) {
        throw Error(Errc::SyntaxError, "trace time goes backwards");
      }
      if (j.contains("status")) {
        const auto status = j["status"].get<std::string>();
        trace.status = status == "errored" ? blocks::ExecStatus::Errored : blocks::ExecStatus::Done;
      }
      if (j.contains("error")) trace.error = j["error"].get<std::string>();
      trace.entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Error(Errc::SyntaxError, "trace line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::SyntaxError, "trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace sib::sim
