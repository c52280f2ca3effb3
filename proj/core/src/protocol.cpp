#include "sib/protocol.h"

#include <array>
#include <utility>

#include "sib/error.h"

namespace sib::station {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<Op, std::string_view>, 6> kOps{{{Op::Subscribe, "subscribe"},
                                                              {Op::Unsubscribe, "unsubscribe"},
                                                              {Op::Publish, "publish"},
                                                              {Op::Call, "call"},
                                                              {Op::Response, "response"},
                                                              {Op::Event, "event"}}};

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::InvalidArgument, what); }

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  if (!j[key].is_string()) bad(std::string("'") + key + "' must be a string");
  return j[key].get<std::string>();
}

}  // namespace

std::string_view to_string(Op op) {
  for (const auto& [o, name] : kOps) {
    if (o == op) return name;
  }
  return "?";
}

StationMessage parse_message(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) bad("message is not valid JSON");
  if (!j.is_object()) bad("message must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "op" && key != "topic" && key != "service" && key != "id" && key != "ok" && key != "payload") {
      bad("unknown field '" + key + "'");
    }
  }
  if (!j.contains("op") || !j["op"].is_string()) bad("'op' must be a string");
  StationMessage m;
  const auto op_name = j["op"].get<std::string>();
  bool found = false;
  for (const auto& [o, name] : kOps) {
    if (name == op_name) {
      m.op = o;
      found = true;
    }
  }
  if (!found) bad("unknown op '" + op_name + "'");
  m.topic = opt_string(j, "topic");
  m.service = opt_string(j, "service");
  m.id = opt_string(j, "id");
  if (j.contains("ok")) {
    if (!j["ok"].is_boolean()) bad("'ok' must be a boolean");
    m.ok = j["ok"].get<bool>();
  }
  if (j.contains("payload")) m.payload = j["payload"];

  switch (m.op) {
    case Op::Call:
      if (!m.id || !m.service) bad("call needs 'id' and 'service'");
      if (m.topic || m.ok) bad("call carries only id, service and payload");
      break;
    case Op::Response:
      if (!m.id || !m.ok) bad("response needs 'id' and 'ok'");
      break;
    case Op::Subscribe:
    case Op::Unsubscribe:
    case Op::Publish:
    case Op::Event:
      if (!m.topic) bad("'" + op_name + "' needs 'topic'");
      if (m.service || m.ok) bad("'" + op_name + "' does not take 'service' or 'ok'");
      break;
  }
  return m;
}

json to_json(const StationMessage& m) {
  json j{{"op", std::string(to_string(m.op))}};
  if (m.topic) j["topic"] = *m.topic;
  if (m.service) j["service"] = *m.service;
  if (m.id) j["id"] = *m.id;
  if (m.ok) j["ok"] = *m.ok;
  j["payload"] = m.payload;
  return j;
}

std::string serialize(const StationMessage& m) { return to_json(m).dump(); }

bool client_writable(std::string_view topic) { return topic == topic::kManualCmd; }

Session::Session(Station& station, Outbox outbox) : station_(station), shared_(std::make_shared<Shared>()) {
  shared_->outbox = std::move(outbox);
  std::weak_ptr<Shared> weak = shared_;
  token_ = station_.bus().subscribe([weak](const TopicEvent& e) {
    auto s = weak.lock();
    if (!s) return;
    {
      std::lock_guard lock(s->mutex);
      if (!s->topics.contains(e.topic)) return;
    }
    s->outbox(e.frame);
  });
}

Session::~Session() { station_.bus().unsubscribe(token_); }

std::set<std::string> Session::subscriptions() const {
  std::lock_guard lock(shared_->mutex);
  return {shared_->topics.begin(), shared_->topics.end()};
}

void Session::send_response(const Shared& shared, const std::string& id, ServiceResult result) {
  StationMessage r;
  r.op = Op::Response;
  r.id = id;
  r.ok = result.ok;
  r.payload = std::move(result.payload);
  shared.outbox(std::make_shared<const std::string>(serialize(r)));
}

bool Session::handle(std::string_view text) {
  StationMessage m;
  try {
    m = parse_message(text);
    if (m.op == Op::Response || m.op == Op::Event) bad("clients may not send '" + std::string(to_string(m.op)) + "'");
  } catch (const Error& e) {
    shared_->outbox(std::make_shared<const std::string>(
        json{{"op", "event"}, {"topic", "protocol_error"}, {"payload", {{"reason", e.what()}}}}.dump()));
    return false;
  }

  // Topic ops answer only when the client supplied an id.
  auto ack = [&](bool ok, json payload) {
    if (m.id) send_response(*shared_, *m.id, {ok, std::move(payload)});
  };

  switch (m.op) {
    case Op::Subscribe:
    case Op::Unsubscribe: {
      if (!station_.bus().has_topic(*m.topic)) {
        ack(false, {{"reason", "unknown topic"}, {"code", "UnknownTopic"}});
        break;
      }
      {
        std::lock_guard lock(shared_->mutex);
        if (m.op == Op::Subscribe) {
          shared_->topics.insert(*m.topic);
        } else {
          shared_->topics.erase(*m.topic);
        }
      }
      ack(true, json::object());
      break;
    }
    case Op::Publish: {
      if (!station_.bus().has_topic(*m.topic)) {
        ack(false, {{"reason", "unknown topic"}, {"code", "UnknownTopic"}});
        break;
      }
      if (!client_writable(*m.topic)) {
        ack(false, {{"reason", "topic not writable"}, {"code", "TopicNotWritable"}});
        break;
      }
      Station::Callback done;
      if (m.id) {
        done = [shared = shared_, id = *m.id](ServiceResult r) { send_response(*shared, id, std::move(r)); };
      }
      station_.publish_manual_async(m.payload, std::move(done));
      break;
    }
    case Op::Call: {
      station_.call_async(*m.service, m.payload,
                          [shared = shared_, id = *m.id](ServiceResult r) { send_response(*shared, id, std::move(r)); });
      break;
    }
    case Op::Response:
    case Op::Event:
      break;
  }
  return true;
}

}  // namespace sib::station
