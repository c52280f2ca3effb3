#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sib/topics.h"

namespace sib::station {

struct TopicInfo {
  std::string name;
  std::string message_kind;
  int publisher_count = 0;
  std::optional<double> last_publish_sim_time;
  std::uint64_t publish_count = 0;
};

struct TopicEvent {
  std::string topic;
  nlohmann::json payload;
  double sim_time = 0.0;
  // {"op":"event","topic":...,"payload":...} serialized once for every subscriber.
  std::shared_ptr<const std::string> frame;
};

// Fixed registry of named topics with fan-out to listeners. Listeners run on
// the publishing thread and must not call back into the bus.
class TopicBus final : public TopicPublisher {
 public:
  using Listener = std::function<void(const TopicEvent&)>;
  using Token = std::uint64_t;

  void register_topic(std::string name, std::string message_kind, int publishers = 0);
  bool has_topic(std::string_view name) const;
  void add_publisher(std::string_view name, int delta = 1);

  // Throws Error{InvalidArgument} for unregistered topics.
  void publish(std::string_view topic, const nlohmann::json& payload) override;
  void set_sim_time(double t);

  Token subscribe(Listener listener);
  void unsubscribe(Token token);

  std::vector<TopicInfo> list() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, TopicInfo, std::less<>> topics_;
  std::map<Token, std::shared_ptr<Listener>> listeners_;
  Token next_token_ = 1;
  double sim_time_ = 0.0;
};

}  // namespace sib::station
