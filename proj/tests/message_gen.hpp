#pragma once

// Random protocol messages for round-trip and fuzz tests.

#include <random>
#include <string>

#include "qkd/protocol/messages.hpp"
#include "qkd/rng.hpp"

namespace testgen {

using namespace qkd;
using namespace qkd::protocol;

inline std::size_t small_size(Engine& rng, std::size_t max) {
  // Mostly short, sometimes empty, occasionally up to `max`.
  switch (rng() % 4) {
    case 0: return 0;
    case 1: return rng() % 9;
    default: return rng() % (max + 1);
  }
}

inline std::vector<std::uint64_t> random_indices(Engine& rng, std::size_t max) {
  std::vector<std::uint64_t> v(small_size(rng, max));
  for (auto& x : v) x = rng();
  return v;
}

inline std::vector<std::uint8_t> random_bits(Engine& rng, std::size_t max) {
  std::vector<std::uint8_t> v(small_size(rng, max));
  for (auto& b : v) b = rng() & 1U;
  return v;
}

inline double random_double(Engine& rng) {
  return std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
}

inline Message random_message(MessageType type, Engine& rng) {
  switch (type) {
    case MessageType::hello:
      return Hello{static_cast<Role>(rng() & 1U), rng(), rng()};
    case MessageType::session_params: {
      SessionParams p;
      p.session_id = rng();
      p.n_pulses = rng();
      p.qber_abort_threshold = random_double(rng);
      if (rng() & 1U) p.sample_fraction = random_double(rng);
      p.rng_seed = rng();
      return p;
    }
    case MessageType::detection_report: {
      DetectionReport r;
      r.pulse_indices = random_indices(rng, 200);
      for (std::size_t i = 0; i < r.pulse_indices.size(); ++i) {
        r.bases.push_back((rng() & 1U) ? Basis::diagonal : Basis::rectilinear);
      }
      return r;
    }
    case MessageType::match_mask: return MatchMask{random_bits(rng, 300)};
    case MessageType::sample_indices: return SampleIndices{random_indices(rng, 200)};
    case MessageType::sample_bits: return SampleBits{random_bits(rng, 300)};
    case MessageType::qber_result:
      return QberResult{rng(), rng(), random_double(rng), (rng() & 1U) != 0};
    case MessageType::abort: {
      Abort a;
      a.reason = static_cast<AbortReason>(1 + rng() % 5);
      a.detail.resize(small_size(rng, 64));
      for (auto& c : a.detail) c = static_cast<char>(rng() & 0xFFU);
      return a;
    }
    case MessageType::done: return Done{rng()};
  }
  return Done{};
}

inline constexpr MessageType kAllTypes[] = {
    MessageType::hello,       MessageType::session_params, MessageType::detection_report,
    MessageType::match_mask,  MessageType::sample_indices, MessageType::sample_bits,
    MessageType::qber_result, MessageType::abort,          MessageType::done,
};

}  // namespace testgen
