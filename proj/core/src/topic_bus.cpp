#include "sib/topic_bus.h"

#include <algorithm>

#include "sib/error.h"

namespace sib::station {

void TopicBus::register_topic(std::string name, std::string message_kind, int publishers) {
  std::lock_guard lock(mutex_);
  TopicInfo info;
  info.name = name;
  info.message_kind = std::move(message_kind);
  info.publisher_count = publishers;
  topics_.insert_or_assign(std::move(name), std::move(info));
}

bool TopicBus::has_topic(std::string_view name) const {
  std::lock_guard lock(mutex_);
  return topics_.find(name) != topics_.end();
}

void TopicBus::add_publisher(std::string_view name, int delta) {
  std::lock_guard lock(mutex_);
  auto it = topics_.find(name);
  if (it != topics_.end()) it->second.publisher_count = std::max(0, it->second.publisher_count + delta);
}

void TopicBus::set_sim_time(double t) {
  std::lock_guard lock(mutex_);
  sim_time_ = t;
}

void TopicBus::publish(std::string_view topic, const nlohmann::json& payload) {
  TopicEvent event;
  std::vector<std::shared_ptr<Listener>> targets;
  {
    std::lock_guard lock(mutex_);
    auto it = topics_.find(topic);
    if (it == topics_.end()) throw Error(Errc::InvalidArgument, "unknown topic '" + std::string(topic) + "'");
    it->second.last_publish_sim_time = sim_time_;
    ++it->second.publish_count;
    event.sim_time = sim_time_;
    for (const auto& [token, listener] : listeners_) targets.push_back(listener);
  }
  event.topic = std::string(topic);
  event.payload = payload;
  event.frame = std::make_shared<const std::string>(
      nlohmann::json{{"op", "event"}, {"topic", event.topic}, {"payload", payload}}.dump());
  for (const auto& listener : targets) (*listener)(event);
}

TopicBus::Token TopicBus::subscribe(Listener listener) {
  std::lock_guard lock(mutex_);
  const Token token = next_token_++;
  listeners_.emplace(token, std::make_shared<Listener>(std::move(listener)));
  return token;
}

void TopicBus::unsubscribe(Token token) {
  std::lock_guard lock(mutex_);
  listeners_.erase(token);
}

std::vector<TopicInfo> TopicBus::list() const {
  std::lock_guard lock(mutex_);
  std::vector<TopicInfo> out;
  for (const auto& [name, info] : topics_) out.push_back(info);
  return out;
}

}  // namespace sib::station
