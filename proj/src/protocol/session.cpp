#include "qkd/protocol/session.hpp"

#include <utility>

namespace qkd::protocol {

namespace {

struct PeerAborted {
  Abort abort;
};

struct LocalAbort {
  AbortReason reason;
  std::string detail;
};

class Party {
 public:
  Party(Transport& transport, MessageStream::Observer observer)
      : stream_(transport, std::move(observer)) {}

  void enter(std::string phase) { phase_ = std::move(phase); }

  void send(const Message& message) {
    try {
      stream_.send(message);
    } catch (const TransportError& e) {
      throw SessionFailed(phase_, e.what());
    }
  }

  Message receive() {
    try {
      return stream_.receive();
    } catch (const TransportError& e) {
      throw SessionFailed(phase_, e.what());
    } catch (const ProtocolViolation& e) {
      throw LocalAbort{AbortReason::protocol_violation, e.what()};
    }
  }

  template <typename T>
  T expect() {
    Message m = receive();
    if (auto* abort = std::get_if<Abort>(&m)) throw PeerAborted{std::move(*abort)};
    if (auto* wanted = std::get_if<T>(&m)) return std::move(*wanted);
    throw LocalAbort{AbortReason::protocol_violation,
                     "unexpected " + std::string(to_string(type_of(m))) + " during " + phase_};
  }

  /// Best effort: the peer may already have hung up.
  void send_abort(const LocalAbort& a) {
    try {
      stream_.send(Abort{a.reason, a.detail});
    } catch (const TransportError&) {
    }
  }

 private:
  MessageStream stream_;
  std::string phase_ = "handshake";
};

SessionReport base_report(Role role, const SharedSessionInfo& shared) {
  SessionReport r;
  r.role = role;
  r.session_id = shared.params.session_id;
  r.scenario_hash = shared.scenario_hash;
  r.status = "aborted";
  r.n_pulses = shared.params.n_pulses;
  r.duration_s = shared.duration_s;
  r.loss = shared.loss;
  r.receiver_efficiency_db = shared.receiver_efficiency_db;
  return r;
}

void mark_aborted(SessionReport& report, AbortReason reason, std::string detail) {
  report.status = "aborted";
  report.abort_reason = std::string(to_string(reason));
  report.abort_detail = std::move(detail);
}

void record_sifted(SessionReport& report, std::size_t sifted_bits) {
  report.sifted_bits = sifted_bits;
  report.sifted_key_rate_bps =
      report.duration_s > 0.0 ? static_cast<double>(sifted_bits) / report.duration_s : 0.0;
}

void check_hello(const Hello& hello, Role expected_role, const SharedSessionInfo& shared) {
  if (hello.role != expected_role)
    throw LocalAbort{AbortReason::parameter_mismatch, "peer announced the wrong role"};
  if (hello.session_id != shared.params.session_id)
    throw LocalAbort{AbortReason::parameter_mismatch, "session id mismatch"};
  if (hello.scenario_hash != shared.scenario_hash)
    throw LocalAbort{AbortReason::parameter_mismatch, "scenario hash mismatch"};
}

}  // namespace

BobDetections process_detections(const BobContext& context) {
  BobDetections out;
  out.clock = recover_clock(context.tags, context.nominal_period_ps, context.block_count,
                            context.clock_options);
  out.gate = assign_and_gate(context.tags, out.clock, context.gate, context.shared.params.n_pulses);
  Engine rng = make_engine(context.classify_seed);
  const auto outcomes = classify_clicks(out.gate.assignments, context.double_click_policy, rng);
  for (const PulseOutcome& o : outcomes) {
    if (o.double_click()) ++out.multi_click_pulses;
  }
  out.reported = reported_outcomes(outcomes);
  return out;
}

SessionReport run_alice(Transport& transport, const AliceContext& context,
                        MessageStream::Observer observer) {
  const SharedSessionInfo& shared = context.shared;
  SessionReport report = base_report(Role::alice, shared);
  Party party(transport, std::move(observer));
  try {
    party.enter("handshake");
    party.send(Hello{Role::alice, shared.params.session_id, shared.scenario_hash});
    check_hello(party.expect<Hello>(), Role::bob, shared);

    party.enter("params");
    party.send(shared.params);

    party.enter("detection_report");
    const auto detections = party.expect<DetectionReport>();
    report.detected_pulses = detections.pulse_indices.size();
    AliceSifting sifting;
    try {
      sifting = alice_match(*context.source, shared.params.n_pulses, detections);
    } catch (const ProtocolViolation& e) {
      throw LocalAbort{AbortReason::protocol_violation, e.what()};
    }
    record_sifted(report, sifting.key.size());

    party.enter("match_mask");
    party.send(sifting.mask);

    party.enter("qber");
    const auto positions = party.expect<SampleIndices>();
    const auto bits = party.expect<SampleBits>();
    QberReport qber;
    try {
      qber = evaluate_sample(sifting.key, positions.positions, bits,
                             shared.params.qber_abort_threshold);
    } catch (const ProtocolViolation& e) {
      throw LocalAbort{AbortReason::protocol_violation, e.what()};
    } catch (const InconclusiveSession& e) {
      throw LocalAbort{AbortReason::inconclusive, e.what()};
    }
    remove_positions(sifting.key, positions.positions);
    report.qber = qber;
    report.final_key_bits = sifting.key.size();
    party.send(QberResult{qber.disclosed, qber.errors, qber.qber, qber.abort});
    if (qber.abort) throw LocalAbort{AbortReason::qber_exceeded, "QBER above abort threshold"};

    party.enter("finish");
    party.expect<Done>();
    party.send(Done{report.final_key_bits});
    report.status = "completed";
  } catch (const LocalAbort& a) {
    party.send_abort(a);
    mark_aborted(report, a.reason, a.detail);
  } catch (const PeerAborted& a) {
    mark_aborted(report, a.abort.reason, a.abort.detail);
  }
  return report;
}

SessionReport run_bob(Transport& transport, const BobContext& context,
                      MessageStream::Observer observer) {
  const SharedSessionInfo& shared = context.shared;
  SessionReport report = base_report(Role::bob, shared);
  Party party(transport, std::move(observer));
  try {
    party.enter("handshake");
    party.send(Hello{Role::bob, shared.params.session_id, shared.scenario_hash});
    check_hello(party.expect<Hello>(), Role::alice, shared);

    party.enter("params");
    const auto params = party.expect<SessionParams>();
    if (!(params == shared.params))
      throw LocalAbort{AbortReason::parameter_mismatch, "session parameters differ"};

    party.enter("detection_report");
    report.tags_total = context.tags.size();
    for (const TimeTag& tag : context.tags) ++report.detector_counts[index_of(tag.detector)];
    BobDetections detections;
    try {
      detections = process_detections(context);
    } catch (const SyncFailure& e) {
      throw LocalAbort{AbortReason::sync_failure, e.what()};
    }
    report.clock = detections.clock;
    report.tags_gated_out = detections.gate.rejected;
    report.tags_out_of_range = detections.gate.out_of_range;
    report.multi_click_pulses = detections.multi_click_pulses;
    report.detected_pulses = detections.reported.size();
    party.send(bob_detection_report(detections.reported));

    party.enter("match_mask");
    const auto mask = party.expect<MatchMask>();
    SiftedKey key;
    try {
      key = bob_sift(detections.reported, mask);
    } catch (const ProtocolViolation& e) {
      throw LocalAbort{AbortReason::protocol_violation, e.what()};
    }
    record_sifted(report, key.size());

    party.enter("qber");
    if (key.size() == 0) throw LocalAbort{AbortReason::inconclusive, "sifted key is empty"};
    Engine rng = make_engine(shared.params.rng_seed);
    const auto positions = select_sample_positions(key.size(), shared.params, rng);
    party.send(SampleIndices{positions});
    party.send(disclose(key, positions));
    const auto result = party.expect<QberResult>();
    report.qber = {result.disclosed, result.errors, result.qber, result.abort};
    remove_positions(key, positions);
    report.final_key_bits = key.size();
    if (result.abort) {
      // Alice follows a failing QBER_RESULT with ABORT.
      party.expect<Done>();
      throw LocalAbort{AbortReason::protocol_violation, "DONE after aborting QBER result"};
    }

    party.enter("finish");
    party.send(Done{report.final_key_bits});
    party.expect<Done>();
    report.status = "completed";
  } catch (const LocalAbort& a) {
    party.send_abort(a);
    mark_aborted(report, a.reason, a.detail);
  } catch (const PeerAborted& a) {
    mark_aborted(report, a.abort.reason, a.abort.detail);
  }
  return report;
}

}  // namespace qkd::protocol
