#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "fields/service.hpp"

namespace fields {

/// Largest accepted length-delimited frame.
inline constexpr std::uint32_t kMaxFrameBytes = 16u << 20;

/// Encodes a payload as a 4-byte big-endian length followed by the bytes.
std::string encode_frame(std::string_view payload);

/// TCP endpoint for a SessionHost. Each connection speaks either
/// length-delimited JSON (4-byte big-endian length prefix) or WebSocket text
/// frames; a connection whose first bytes are "GET " is upgraded to WebSocket.
/// Every connection receives the snapshot stream plus replies to its own
/// messages.
class Server {
 public:
  Server(SessionHost& host, std::uint16_t port, const std::string& address = "0.0.0.0");
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bound port (useful when constructed with port 0).
  std::uint16_t port() const;

  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fields
