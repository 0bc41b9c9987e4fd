#include "qkd/protocol/transport.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>

#include "qkd/protocol/wire.hpp"

namespace qkd::protocol {

namespace {

struct PipeBuffer {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};

class PipeEnd final : public Transport {
 public:
  PipeEnd(std::shared_ptr<PipeBuffer> inbound, std::shared_ptr<PipeBuffer> outbound)
      : in_(std::move(inbound)), out_(std::move(outbound)) {}
  ~PipeEnd() override { close(); }

  void send(std::span<const std::uint8_t> bytes) override {
    {
      std::lock_guard lock(out_->mutex);
      if (out_->closed) throw TransportError("pipe closed");
      out_->bytes.insert(out_->bytes.end(), bytes.begin(), bytes.end());
    }
    out_->ready.notify_all();
  }

  std::size_t receive(std::span<std::uint8_t> buffer) override {
    std::unique_lock lock(in_->mutex);
    in_->ready.wait(lock, [&] { return !in_->bytes.empty() || in_->closed; });
    const std::size_t n = std::min(buffer.size(), in_->bytes.size());
    std::copy_n(in_->bytes.begin(), n, buffer.begin());
    in_->bytes.erase(in_->bytes.begin(), in_->bytes.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  void close() override {
    for (auto* side : {in_.get(), out_.get()}) {
      {
        std::lock_guard lock(side->mutex);
        side->closed = true;
      }
      side->ready.notify_all();
    }
  }

 private:
  std::shared_ptr<PipeBuffer> in_;
  std::shared_ptr<PipeBuffer> out_;
};

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_pipe_pair() {
  auto a_to_b = std::make_shared<PipeBuffer>();
  auto b_to_a = std::make_shared<PipeBuffer>();
  return {std::make_unique<PipeEnd>(b_to_a, a_to_b), std::make_unique<PipeEnd>(a_to_b, b_to_a)};
}

MessageStream::MessageStream(Transport& transport, Observer observer)
    : transport_(transport), observer_(std::move(observer)) {}

void MessageStream::send(const Message& message) {
  const auto frame = encode_frame(message);
  transport_.send(frame);
  if (observer_) observer_(Direction::sent, message);
}

Message MessageStream::receive() {
  std::uint8_t chunk[64 * 1024];
  for (;;) {
    DecodeResult r = decode_frame(buffer_);
    if (r.status == DecodeStatus::ok) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
      if (observer_) observer_(Direction::received, *r.message);
      return std::move(*r.message);
    }
    if (r.status == DecodeStatus::corrupt)
      throw ProtocolViolation("corrupt frame: " + std::string(to_string(r.error)));
    const std::size_t n = transport_.receive(chunk);
    if (n == 0) throw TransportError("transport closed");
    buffer_.insert(buffer_.end(), chunk, chunk + n);
  }
}

}  // namespace qkd::protocol
