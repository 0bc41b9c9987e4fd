#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "qkd/protocol/transport.hpp"

namespace qkd::protocol {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(std::span<const std::uint8_t> bytes) override {
    while (!bytes.empty()) {
      const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("send"));
      }
      bytes = bytes.subspan(static_cast<std::size_t>(n));
    }
  }

  std::size_t receive(std::span<std::uint8_t> buffer) override {
    for (;;) {
      const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      if (errno == ECONNRESET) return 0;
      throw TransportError(errno_text("recv"));
    }
  }

  void close() override {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  int fd_;
};

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &result);
  if (rc != 0 || result == nullptr)
    throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, result->ai_addr, sizeof(addr));
  ::freeaddrinfo(result);
  addr.sin_port = htons(port);
  return addr;
}

}  // namespace

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  const sockaddr_in addr = resolve(host, port);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket"));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 1) != 0) {
    const auto message = errno_text("listen");
    ::close(fd_);
    throw TransportError(message);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Transport> TcpListener::accept(std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc == 0) throw TransportError("listen timeout: no peer connected");
  if (rc < 0) throw TransportError(errno_text("poll"));
  const int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0) throw TransportError(errno_text("accept"));
  return std::make_unique<TcpTransport>(client);
}

std::unique_ptr<Transport> tcp_connect(const std::string& host, std::uint16_t port,
                                       std::chrono::milliseconds timeout) {
  const sockaddr_in addr = resolve(host, port);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(errno_text("socket"));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0)
      return std::make_unique<TcpTransport>(fd);
    const auto message = errno_text("connect");
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw TransportError(message + " (gave up after timeout)");
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace qkd::protocol
