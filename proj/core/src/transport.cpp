#include "fields/transport.hpp"

#include <array>
#include <deque>
#include <iostream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace fields {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string encode_frame(std::string_view payload) {
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.append(payload);
  return out;
}

namespace {

std::uint32_t decode_length(const std::array<unsigned char, 4>& h) {
  return (std::uint32_t{h[0]} << 24) | (std::uint32_t{h[1]} << 16) | (std::uint32_t{h[2]} << 8) | std::uint32_t{h[3]};
}

// Common plumbing: write queue drained on the io thread, host subscription.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(asio::io_context& ioc, SessionHost& host) : ioc_(ioc), host_(host) {}
  virtual ~Connection() = default;

  void send(SessionHost::Payload payload) {
    asio::post(ioc_, [self = shared_from_this(), p = std::move(payload)]() mutable {
      if (self->closed_) return;
      self->outbox_.push_back(std::move(p));
      if (self->outbox_.size() == 1) self->write_next();
    });
  }

 protected:
  SessionHost::Sink sink() {
    std::weak_ptr<Connection> weak = shared_from_this();
    return [weak](SessionHost::Payload p) {
      if (auto self = weak.lock()) self->send(std::move(p));
    };
  }

  void attach() { subscription_ = host_.subscribe(sink()); }

  void close() {
    if (closed_) return;
    closed_ = true;
    if (subscription_) host_.unsubscribe(subscription_);
    outbox_.clear();
  }

  void wrote(beast::error_code ec) {
    if (ec) return close();
    outbox_.pop_front();
    if (!outbox_.empty()) write_next();
  }

  virtual void write_next() = 0;

  asio::io_context& ioc_;
  SessionHost& host_;
  std::deque<SessionHost::Payload> outbox_;
  std::uint64_t subscription_ = 0;
  bool closed_ = false;
};

class FramedConnection : public Connection {
 public:
  FramedConnection(asio::io_context& ioc, SessionHost& host, tcp::socket socket,
                   std::array<unsigned char, 4> first_header)
      : Connection(ioc, host), socket_(std::move(socket)), header_(first_header) {}

  void begin() {
    attach();
    read_body();
  }

 private:
  void read_header() {
    asio::async_read(socket_, asio::buffer(header_), [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec) return close();
      read_body();
    });
  }

  void read_body() {
    const std::uint32_t n = decode_length(header_);
    if (n > kMaxFrameBytes) {
      close();
      beast::error_code ignored;
      socket_.close(ignored);
      return;
    }
    body_.assign(n, '\0');
    asio::async_read(socket_, asio::buffer(body_), [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec) return close();
      host_.submit_text(body_, sink());
      read_header();
    });
  }

  void write_next() override {
    const std::string& payload = *outbox_.front();
    const auto n = static_cast<std::uint32_t>(payload.size());
    out_header_ = {static_cast<unsigned char>(n >> 24), static_cast<unsigned char>(n >> 16),
                   static_cast<unsigned char>(n >> 8), static_cast<unsigned char>(n)};
    std::array<asio::const_buffer, 2> bufs{asio::buffer(out_header_), asio::buffer(payload)};
    asio::async_write(socket_, bufs, [self = shared(), this](beast::error_code ec, std::size_t) { wrote(ec); });
  }

  std::shared_ptr<FramedConnection> shared() {
    return std::static_pointer_cast<FramedConnection>(shared_from_this());
  }

  tcp::socket socket_;
  std::array<unsigned char, 4> header_;
  std::array<unsigned char, 4> out_header_{};
  std::string body_;
};

class WebSocketConnection : public Connection {
 public:
  WebSocketConnection(asio::io_context& ioc, SessionHost& host, tcp::socket socket, std::string_view prefix)
      : Connection(ioc, host), ws_(std::move(socket)) {
    auto buf = buffer_.prepare(prefix.size());
    asio::buffer_copy(buf, asio::buffer(prefix.data(), prefix.size()));
    buffer_.commit(prefix.size());
  }

  void begin() {
    http::async_read(ws_.next_layer(), buffer_, request_, [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec || !websocket::is_upgrade(request_)) return close();
      ws_.text(true);
      ws_.async_accept(request_, [self = shared(), this](beast::error_code ec2) {
        if (ec2) return close();
        buffer_.consume(buffer_.size());
        attach();
        read_message();
      });
    });
  }

 private:
  void read_message() {
    ws_.async_read(buffer_, [self = shared(), this](beast::error_code ec, std::size_t) {
      if (ec) return close();
      host_.submit_text(beast::buffers_to_string(buffer_.data()), sink());
      buffer_.consume(buffer_.size());
      read_message();
    });
  }

  void write_next() override {
    ws_.async_write(asio::buffer(*outbox_.front()),
                    [self = shared(), this](beast::error_code ec, std::size_t) { wrote(ec); });
  }

  std::shared_ptr<WebSocketConnection> shared() {
    return std::static_pointer_cast<WebSocketConnection>(shared_from_this());
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

// Reads the first four bytes of a new connection to pick its framing.
class Sniffer : public std::enable_shared_from_this<Sniffer> {
 public:
  Sniffer(asio::io_context& ioc, SessionHost& host, tcp::socket socket)
      : ioc_(ioc), host_(host), socket_(std::move(socket)) {}

  void run() {
    asio::async_read(socket_, asio::buffer(head_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      const std::string_view prefix(reinterpret_cast<const char*>(self->head_.data()), self->head_.size());
      if (prefix == "GET ") {
        std::make_shared<WebSocketConnection>(self->ioc_, self->host_, std::move(self->socket_), prefix)->begin();
      } else {
        std::make_shared<FramedConnection>(self->ioc_, self->host_, std::move(self->socket_), self->head_)->begin();
      }
    });
  }

 private:
  asio::io_context& ioc_;
  SessionHost& host_;
  tcp::socket socket_;
  std::array<unsigned char, 4> head_{};
};

}  // namespace

struct Server::Impl {
  Impl(SessionHost& h, std::uint16_t port, const std::string& address)
      : host(h), acceptor(ioc, tcp::endpoint(asio::ip::make_address(address), port)) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != asio::error::operation_aborted) std::cerr << "accept: " << ec.message() << '\n';
        return;
      }
      socket.set_option(tcp::no_delay(true));
      std::make_shared<Sniffer>(ioc, host, std::move(socket))->run();
      accept();
    });
  }

  SessionHost& host;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> guard;
  std::thread thread;
};

Server::Server(SessionHost& host, std::uint16_t port, const std::string& address)
    : impl_(std::make_unique<Impl>(host, port, address)) {}

Server::~Server() { stop(); }

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start() {
  if (impl_->thread.joinable()) return;
  impl_->guard.emplace(impl_->ioc.get_executor());
  impl_->accept();
  impl_->thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

void Server::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  asio::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
  });
  impl_->guard.reset();
  impl_->ioc.stop();
  impl_->thread.join();
}

}  // namespace fields
