#include "sib/station_server.h"

#include <atomic>
#include <deque>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "sib/error.h"
#include "sib/program_store.h"
#include "sib/protocol.h"

namespace sib::station {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

// Frames beyond this are dropped for a peer that stops reading.
constexpr std::size_t kMaxQueuedFrames = 4096;
constexpr std::size_t kMaxBodyBytes = 4 * 1024 * 1024;

constexpr const char* kBuiltinPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>Swarm Station</title></head>
<body>
<h1>Swarm Station</h1>
<p>The station is running. Connect a client to <code>/ws</code> or start the UI with <code>--ui</code>.</p>
<pre id="t"></pre>
<script>
const ws = new WebSocket((location.protocol === "https:" ? "wss://" : "ws://") + location.host + "/ws");
ws.onopen = () => ws.send(JSON.stringify({op: "subscribe", topic: "telemetry"}));
ws.onmessage = (m) => { document.getElementById("t").textContent = m.data; };
</script>
</body></html>
)";

std::string mime_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

http::status status_for(Errc code) {
  switch (code) {
    case Errc::NotFound: return http::status::not_found;
    case Errc::StorageFailure: return http::status::internal_server_error;
    default: return http::status::bad_request;
  }
}

struct Shared {
  Shared(Station& s, std::optional<std::filesystem::path> ui) : station(s), ui_dir(std::move(ui)) {}
  Station& station;
  std::optional<std::filesystem::path> ui_dir;
  std::atomic<std::size_t> sessions{0};
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
      : ws_(std::move(socket)), shared_(std::move(shared)) {}

  void run(http::request<http::string_body> req) {
    ++shared_->sessions;
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  ~WsSession() {
    session_.reset();
    --shared_->sessions;
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto executor = ws_.get_executor();
    session_ = std::make_unique<Session>(shared_->station, [weak, executor](std::shared_ptr<const std::string> frame) {
      asio::post(executor, [weak, frame = std::move(frame)]() mutable {
        if (auto self = weak.lock()) self->enqueue(std::move(frame));
      });
    });
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (!session_->handle(text)) {
      // The error frame was posted to this strand; queue the close behind it.
      closing_ = true;
      asio::post(ws_.get_executor(), [self = shared_from_this()] { self->maybe_close(); });
      return;
    }
    do_read();
  }

  void enqueue(std::shared_ptr<const std::string> frame) {
    if (closed_ || (closing_ && close_sent_)) return;
    if (queue_.size() >= kMaxQueuedFrames) return;
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) do_write();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      queue_.clear();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
      do_write();
    } else {
      maybe_close();
    }
  }

  void maybe_close() {
    if (!closing_ || close_sent_ || !queue_.empty()) return;
    close_sent_ = true;
    ws_.async_close(websocket::close_reason(websocket::close_code::protocol_error),
                    [self = shared_from_this()](beast::error_code) { self->closed_ = true; });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Shared> shared_;
  std::unique_ptr<Session> session_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closing_ = false;
  bool close_sent_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
      : stream_(std::move(socket)), shared_(std::move(shared)) {}

  void run() {
    asio::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(kMaxBodyBytes);
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (ec) return;
    auto req = parser_->release();
    if (websocket::is_upgrade(req)) {
      if (req.target() != "/ws") {
        send(make(req, http::status::not_found, "application/json", R"({"reason":"not found"})"));
        return;
      }
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), shared_)->run(std::move(req));
      return;
    }
    route(std::move(req));
  }

  static http::response<http::string_body> make(const http::request<http::string_body>& req, http::status status,
                                                std::string_view type, std::string body) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::server, "sib-station");
    res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  }

  static http::response<http::string_body> error(const http::request<http::string_body>& req, http::status status,
                                                 const std::string& reason) {
    return make(req, status, "application/json", json{{"reason", reason}}.dump());
  }

  void route(http::request<http::string_body> req) {
    const std::string target(req.target());
    const std::string path = target.substr(0, target.find('?'));
    Station& station = shared_->station;
    try {
      if (path == "/healthz") {
        if (req.method() != http::verb::get) return send(error(req, http::status::method_not_allowed, "GET only"));
        return send(make(req, http::status::ok, "application/json", R"({"ok":true})"));
      }
      if (path == "/api/programs") {
        if (req.method() != http::verb::get) return send(error(req, http::status::method_not_allowed, "GET only"));
        return send(make(req, http::status::ok, "application/json", json{{"programs", station.program_names()}}.dump()));
      }
      if (path.starts_with("/api/programs/")) {
        const std::string name = path.substr(std::string_view("/api/programs/").size());
        if (!blocks::is_valid_program_name(name)) return send(error(req, http::status::bad_request, "invalid name"));
        if (req.method() == http::verb::get) {
          return send(make(req, http::status::ok, "application/json", station.program_bytes(name)));
        }
        if (req.method() == http::verb::put) {
          const json payload{{"name", name}, {"program", req.body()}};
          auto self = shared_from_this();
          auto executor = stream_.get_executor();
          auto shared_req = std::make_shared<http::request<http::string_body>>(std::move(req));
          station.call_async("store", payload, [self, executor, shared_req](ServiceResult r) {
            auto res = r.ok ? make(*shared_req, http::status::ok, "application/json", r.payload.dump())
                            : make(*shared_req, http::status::bad_request, "application/json", r.payload.dump());
            asio::post(executor, [self, res = std::move(res)]() mutable { self->send(std::move(res)); });
          });
          return;
        }
        return send(error(req, http::status::method_not_allowed, "GET or PUT only"));
      }
      if (path.starts_with("/api/trace/")) {
        if (req.method() != http::verb::get) return send(error(req, http::status::method_not_allowed, "GET only"));
        const auto trace = station.trace_jsonl(path.substr(std::string_view("/api/trace/").size()));
        if (!trace) return send(error(req, http::status::not_found, "unknown run id"));
        return send(make(req, http::status::ok, "application/x-ndjson", *trace));
      }
      if (req.method() != http::verb::get) return send(error(req, http::status::method_not_allowed, "GET only"));
      return serve_static(req, path);
    } catch (const Error& e) {
      return send(error(req, status_for(e.code()), e.what()));
    }
  }

  void serve_static(const http::request<http::string_body>& req, const std::string& path) {
    if (!shared_->ui_dir) {
      if (path == "/" || path == "/index.html") return send(make(req, http::status::ok, "text/html; charset=utf-8", kBuiltinPage));
      return send(error(req, http::status::not_found, "not found"));
    }
    if (path.find("..") != std::string::npos) return send(error(req, http::status::bad_request, "bad path"));
    auto file = *shared_->ui_dir / (path == "/" ? std::string("index.html") : path.substr(1));
    std::error_code ec;
    if (!std::filesystem::is_regular_file(file, ec)) {
      // Client-side routes fall back to the app shell.
      file = *shared_->ui_dir / "index.html";
      if (!std::filesystem::is_regular_file(file, ec)) return send(error(req, http::status::not_found, "not found"));
    }
    std::ifstream in(file, std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    send(make(req, http::status::ok, mime_for(file), body.str()));
  }

  void send(http::response<http::string_body> res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (sp->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  std::shared_ptr<Shared> shared_;
};

class Listener : public std::enable_shared_from_this<Listener> {
 public:
  Listener(asio::io_context& ioc, tcp::endpoint endpoint, std::shared_ptr<Shared> shared)
      : ioc_(ioc), acceptor_(asio::make_strand(ioc)), shared_(std::move(shared)) {
    beast::error_code ec;
    acceptor_.open(endpoint.protocol(), ec);
    if (!ec) acceptor_.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(endpoint, ec);
    if (!ec) acceptor_.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw Error(Errc::BindFailure, "cannot listen on " + endpoint.address().to_string() + ":" +
                                              std::to_string(endpoint.port()) + ": " + ec.message());
  }

  std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

  void run() { do_accept(); }
  void close() {
    asio::post(acceptor_.get_executor(), [self = shared_from_this()] {
      beast::error_code ignored;
      self->acceptor_.close(ignored);
    });
  }

 private:
  void do_accept() {
    acceptor_.async_accept(asio::make_strand(ioc_), beast::bind_front_handler(&Listener::on_accept, shared_from_this()));
  }

  void on_accept(beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), shared_)->run();
    if (acceptor_.is_open()) do_accept();
  }

  asio::io_context& ioc_;
  tcp::acceptor acceptor_;
  std::shared_ptr<Shared> shared_;
};

}  // namespace

struct StationServer::Impl {
  ServerOptions options;
  std::shared_ptr<Shared> shared;
  std::unique_ptr<asio::io_context> ioc;
  std::shared_ptr<Listener> listener;
  std::vector<std::thread> threads;
  std::uint16_t port = 0;
};

StationServer::StationServer(Station& station, ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->shared = std::make_shared<Shared>(station, impl_->options.ui_dir);
}

StationServer::~StationServer() { stop(); }

void StationServer::start() {
  if (impl_->listener) return;
  boost::system::error_code ec;
  const auto address = asio::ip::make_address(impl_->options.address, ec);
  if (ec) throw Error(Errc::BindFailure, "invalid address '" + impl_->options.address + "'");
  const int threads = std::max(1, impl_->options.io_threads);
  impl_->ioc = std::make_unique<asio::io_context>(threads);
  impl_->listener = std::make_shared<Listener>(*impl_->ioc, tcp::endpoint{address, impl_->options.port}, impl_->shared);
  impl_->port = impl_->listener->port();
  impl_->listener->run();
  for (int i = 0; i < threads; ++i) impl_->threads.emplace_back([ioc = impl_->ioc.get()] { ioc->run(); });
}

void StationServer::stop() {
  if (!impl_->listener) return;
  impl_->listener->close();
  impl_->ioc->stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
  impl_->listener.reset();
  impl_->ioc.reset();
}

std::uint16_t StationServer::port() const { return impl_->port; }

std::size_t StationServer::session_count() const { return impl_->shared->sessions.load(); }

}  // namespace sib::station
