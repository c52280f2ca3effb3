#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sib/station.h"

namespace sib::station {

enum class Op { Subscribe, Unsubscribe, Publish, Call, Response, Event };

std::string_view to_string(Op op);

struct StationMessage {
  Op op = Op::Event;
  std::optional<std::string> topic;
  std::optional<std::string> service;
  std::optional<std::string> id;
  std::optional<bool> ok;
  nlohmann::json payload = nlohmann::json::object();
};

// Strict parse: any unknown key, wrong type or missing required field throws
// Error{InvalidArgument}. Required: call needs id and service; topic ops and
// events need topic; responses need id and ok.
StationMessage parse_message(std::string_view text);
nlohmann::json to_json(const StationMessage& m);
std::string serialize(const StationMessage& m);

// Topics clients may publish to.
bool client_writable(std::string_view topic);

// Per-connection protocol state. Frames for the peer go through the outbox,
// which may be invoked from the tick thread and must not block.
class Session {
 public:
  using Outbox = std::function<void(std::shared_ptr<const std::string>)>;

  Session(Station& station, Outbox outbox);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Returns false when the message was malformed; a protocol error frame has
  // then been sent and the caller should close the connection.
  bool handle(std::string_view text);

  std::set<std::string> subscriptions() const;

 private:
  struct Shared {
    Outbox outbox;
    mutable std::mutex mutex;
    std::set<std::string, std::less<>> topics;
  };

  static void send_response(const Shared& shared, const std::string& id, ServiceResult result);

  Station& station_;
  std::shared_ptr<Shared> shared_;
  TopicBus::Token token_ = 0;
};

}  // namespace sib::station
