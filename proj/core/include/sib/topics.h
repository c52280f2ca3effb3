#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace sib {

// Topic names shared across the runtime.
namespace topic {
inline constexpr std::string_view kRunning = "running";
inline constexpr std::string_view kBlock = "block";
inline constexpr std::string_view kError = "error";
inline constexpr std::string_view kPrompt = "prompt";
inline constexpr std::string_view kTelemetry = "telemetry";
inline constexpr std::string_view kSafeAreaViolation = "safe_area_violation";
inline constexpr std::string_view kManualCmd = "manual_cmd";
inline constexpr std::string_view kSimEvent = "sim_event";
}  // namespace topic

class TopicPublisher {
 public:
  virtual ~TopicPublisher() = default;
  virtual void publish(std::string_view topic, const nlohmann::json& payload) = 0;
};

}  // namespace sib
