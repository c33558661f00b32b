#include "coachlab/server.hpp"

#include <atomic>
#include <charconv>
#include <deque>
#include <future>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace coachlab {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class Client;

struct Hub {
  TrainingSession& session;
  std::size_t queue_limit;
  std::set<std::shared_ptr<Client>> clients;  // touched on the I/O thread only
  std::atomic<std::size_t> client_count{0};
  std::atomic<std::uint64_t> dropped{0};
};

class Client : public std::enable_shared_from_this<Client> {
 public:
  Client(tcp::socket&& socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  /// Replies are always queued; broadcasts are dropped when the queue is full.
  void send(std::shared_ptr<const std::string> message, bool droppable) {
    if (droppable && queue_.size() >= hub_.queue_limit) {
      hub_.dropped.fetch_add(1);
      return;
    }
    queue_.push_back(std::move(message));
    if (!writing_) write_next();
  }

  void close() {
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    hub_.clients.insert(shared_from_this());
    hub_.client_count.store(hub_.clients.size());
    send(std::make_shared<const std::string>(hub_.session.snapshot()), false);
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      leave();
      return;
    }
    const Timestamp receipt = hub_.session.clock_now();
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    send(std::make_shared<const std::string>(hub_.session.handle_message(text, receipt)), false);
    read_next();
  }

  void write_next() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
  }

  void on_write(beast::error_code ec) {
    writing_ = false;
    if (ec) {
      leave();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) write_next();
  }

  void leave() {
    hub_.clients.erase(shared_from_this());
    hub_.client_count.store(hub_.clients.size());
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool writing_ = false;
};

}  // namespace

struct TrainerServer::Impl {
  Impl(TrainingSession& s, std::string addr, std::uint16_t p)
      : session(s),
        address(std::move(addr)),
        requested_port(p),
        hub{s, s.config().service.client_queue_limit, {}, {}, {}},
        acceptor(ioc),
        loop(s, std::chrono::milliseconds(s.config().service.cycle_ms), [this](const std::string& m) { broadcast(m); }) {}

  void accept_next() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<Client>(std::move(socket), hub)->start();
      accept_next();
    });
  }

  void broadcast(const std::string& message) {
    auto shared = std::make_shared<const std::string>(message);
    net::post(ioc, [this, shared] {
      for (const auto& c : hub.clients) c->send(shared, true);
    });
  }

  TrainingSession& session;
  std::string address;
  std::uint16_t requested_port;
  net::io_context ioc{1};
  Hub hub;
  tcp::acceptor acceptor;
  CycleLoop loop;
  std::thread io_thread;
  std::thread loop_thread;
  std::uint16_t bound_port = 0;
  bool running = false;
};

TrainerServer::TrainerServer(TrainingSession& session, std::string address, std::uint16_t port)
    : impl_(std::make_unique<Impl>(session, std::move(address), port)) {}

TrainerServer::~TrainerServer() { stop(); }

void TrainerServer::start() {
  if (impl_->running) return;
  beast::error_code ec;
  const auto addr = net::ip::make_address(impl_->address, ec);
  if (ec) throw std::runtime_error("invalid listen address '" + impl_->address + "'");
  const tcp::endpoint endpoint(addr, impl_->requested_port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw std::runtime_error("cannot listen on " + impl_->address + ": " + ec.message());
  impl_->bound_port = impl_->acceptor.local_endpoint().port();
  impl_->accept_next();
  impl_->running = true;
  impl_->io_thread = std::thread([this] {
    auto guard = net::make_work_guard(impl_->ioc);
    impl_->ioc.run();
  });
  impl_->loop_thread = std::thread([this] { impl_->loop.run(); });
}

void TrainerServer::stop() {
  if (!impl_->running) return;
  impl_->running = false;
  impl_->loop.stop();
  if (impl_->loop_thread.joinable()) impl_->loop_thread.join();
  std::promise<void> closed;
  net::post(impl_->ioc, [this, &closed] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    for (const auto& c : impl_->hub.clients) c->close();
    impl_->hub.clients.clear();
    impl_->hub.client_count.store(0);
    closed.set_value();
  });
  closed.get_future().wait();
  impl_->ioc.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

std::uint16_t TrainerServer::port() const { return impl_->bound_port; }
std::size_t TrainerServer::clients() const { return impl_->hub.client_count.load(); }
std::uint64_t TrainerServer::dropped_frames() const { return impl_->hub.dropped.load(); }
const CycleLoop& TrainerServer::loop() const { return impl_->loop; }

std::pair<std::string, std::uint16_t> parse_listen_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("listen address must be host:port, got '" + text + "'");
  }
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc{} || ptr != last || port > 65535) throw ConfigError("invalid port in '" + text + "'");
  return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

}  // namespace coachlab
