#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qkd/protocol/messages.hpp"

namespace qkd::protocol {

/// Peer went away, or a socket operation failed.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reliable ordered byte stream between the two parties.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(std::span<const std::uint8_t> bytes) = 0;
  /// Blocks until at least one byte is available; returns 0 once the peer has closed.
  virtual std::size_t receive(std::span<std::uint8_t> buffer) = 0;
  virtual void close() = 0;
};

/// Connected in-process byte pipes.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_pipe_pair();

/// Listening TCP socket; port 0 picks an ephemeral port.
class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  /// Throws TransportError when nobody connects within `timeout`.
  std::unique_ptr<Transport> accept(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Retries until `timeout` elapses, then throws TransportError.
std::unique_ptr<Transport> tcp_connect(const std::string& host, std::uint16_t port,
                                       std::chrono::milliseconds timeout);

enum class Direction : std::uint8_t { sent, received };

/// Frames messages over a transport.
class MessageStream {
 public:
  using Observer = std::function<void(Direction, const Message&)>;

  explicit MessageStream(Transport& transport, Observer observer = {});

  void send(const Message& message);
  /// Throws TransportError when the stream ends and ProtocolViolation on a corrupt frame.
  Message receive();

 private:
  Transport& transport_;
  Observer observer_;
  std::vector<std::uint8_t> buffer_;
};

}  // namespace qkd::protocol
