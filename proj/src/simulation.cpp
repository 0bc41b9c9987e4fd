#include "qkd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace qkd {

double epoch_hint_ps(const Scenario& scenario) {
  const double pulse0 = scenario.sync.true_clock.to_bob(scenario.channel.effective_delay_ps());
  return std::round(pulse0 / kEpochMarkerResolutionPs) * kEpochMarkerResolutionPs;
}

QuantumPhase simulate_quantum_phase(const Scenario& scenario) {
  scenario.validate();
  const PulseSource source(scenario.source);
  const FreeSpaceChannel channel(scenario.channel, scenario.source.wavelength_nm,
                                 scenario.sync.true_clock);
  const Receiver receiver(scenario.receiver);
  const std::uint64_t n = scenario.n_pulses();

  QuantumPhase out;
  std::vector<PhotonArrival> arrivals;
  for (std::uint64_t first = 0, shard = 0; first < n; first += kShardPulses, ++shard) {
    const std::uint64_t last = std::min(n, first + kShardPulses);
    Engine channel_rng = make_engine(derive_seed(scenario.channel.rng_seed, shard));
    Engine receiver_rng = make_engine(derive_seed(scenario.receiver.rng_seed, shard));
    arrivals.clear();
    channel.transmit_range(source, first, last, channel_rng, arrivals);
    sort_arrivals(arrivals);
    out.photons_arrived += arrivals.size();
    receiver.detect_signal(arrivals, receiver_rng, out.tags);
  }

  const TrueClock& clock = scenario.sync.true_clock;
  const double delay = scenario.channel.effective_delay_ps();
  const double start = clock.to_bob(delay);
  const double length = clock.to_bob(static_cast<double>(n) * source.period_ps() + delay) - start;
  Engine background_rng = make_engine(derive_seed(scenario.receiver.rng_seed, "background"));
  receiver.add_background(start, length, background_rng, out.tags);

  out.dead_time_dropped = receiver.apply_dead_time(out.tags);
  out.signal_tags = static_cast<std::uint64_t>(std::count_if(
      out.tags.begin(), out.tags.end(), [](const TimeTag& t) { return t.source_pulse >= 0; }));
  out.background_tags = out.tags.size() - out.signal_tags;
  out.epoch_hint_ps = epoch_hint_ps(scenario);
  return out;
}

protocol::SharedSessionInfo shared_info(const Scenario& scenario) {
  protocol::SharedSessionInfo info;
  info.params = scenario.protocol;
  info.params.n_pulses = scenario.n_pulses();
  info.scenario_hash = scenario_hash(scenario);
  info.duration_s = scenario.duration_s;
  info.loss = link_loss(scenario.channel, scenario.source.wavelength_nm);
  info.receiver_efficiency_db = scenario.receiver.efficiency_db;
  return info;
}

protocol::AliceContext alice_context(const Scenario& scenario, const PulseSource& source) {
  return {shared_info(scenario), &source};
}

protocol::BobContext bob_context(const Scenario& scenario, const QuantumPhase& quantum) {
  protocol::BobContext ctx;
  ctx.shared = shared_info(scenario);
  ctx.tags = quantum.tags;
  ctx.nominal_period_ps = scenario.source.period_ps();
  ctx.block_count = scenario.sync.block_count;
  ctx.clock_options.max_drift_ppm = scenario.sync.max_drift_ppm;
  if (scenario.sync.beacon_assisted) ctx.clock_options.known_drift_ppm = scenario.sync.true_clock.drift_ppm;
  ctx.clock_options.epoch_hint_ps = quantum.epoch_hint_ps;
  ctx.clock_options.histogram_bins = scenario.sync.histogram_bins;
  ctx.gate = scenario.sync.gate;
  ctx.double_click_policy = scenario.receiver.double_click_policy;
  ctx.classify_seed = derive_seed(scenario.receiver.rng_seed, "classify");
  return ctx;
}

SessionPair run_in_process(const Scenario& scenario, const QuantumPhase& quantum) {
  const PulseSource source(scenario.source);
  const auto alice_ctx = alice_context(scenario, source);
  const auto bob_ctx = bob_context(scenario, quantum);
  auto [alice_end, bob_end] = protocol::make_pipe_pair();

  SessionPair result;
  std::exception_ptr bob_error;
  std::thread bob([&, end = bob_end.get()] {
    try {
      result.bob = protocol::run_bob(*end, bob_ctx);
    } catch (...) {
      bob_error = std::current_exception();
    }
    end->close();
  });
  std::exception_ptr alice_error;
  try {
    result.alice = protocol::run_alice(*alice_end, alice_ctx);
  } catch (...) {
    alice_error = std::current_exception();
  }
  alice_end->close();
  bob.join();
  if (alice_error) std::rethrow_exception(alice_error);
  if (bob_error) std::rethrow_exception(bob_error);
  return result;
}

SessionPair run_in_process(const Scenario& scenario) {
  return run_in_process(scenario, simulate_quantum_phase(scenario));
}

}  // namespace qkd
