#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "sib/station.h"

namespace sib::station {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks an ephemeral port
  std::optional<std::filesystem::path> ui_dir;  // built-in page when unset
  int io_threads = 2;
};

// WebSocket bridge at /ws plus the HTTP endpoints. The station should be in
// realtime mode while the server runs so calls are serialized on its tick
// thread.
class StationServer {
 public:
  StationServer(Station& station, ServerOptions options);
  ~StationServer();

  StationServer(const StationServer&) = delete;
  StationServer& operator=(const StationServer&) = delete;

  // Binds and starts the io threads. Throws Error{BindFailure}.
  void start();
  void stop();
  std::uint16_t port() const;
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sib::station
