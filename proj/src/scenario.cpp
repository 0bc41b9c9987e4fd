#include "qkd/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qkd {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "must be an object");
  }

  template <typename T>
  void required(const char* key, T& out) {
    if (!node_.contains(key)) throw ConfigError(field(key), "missing required field");
    read(key, out);
  }

  template <typename T>
  void optional(const char* key, T& out) {
    if (node_.contains(key)) read(key, out);
  }

  Section child(const char* key) {
    if (!node_.contains(key)) throw ConfigError(field(key), "missing required section");
    seen_.insert(key);
    return Section(node_.at(key), field(key));
  }

  bool has(const char* key) const { return node_.contains(key); }

  /// Rejects keys nobody asked for, which catches misspelt field names.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key.c_str()), "unknown field");
    }
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  void read(const char* key, double& out) {
    const json& v = take(key);
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    out = v.get<double>();
  }
  void read(const char* key, std::uint64_t& out) {
    const json& v = take(key);
    if (!v.is_number_unsigned()) throw ConfigError(field(key), "must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  void read(const char* key, std::int64_t& out) {
    const json& v = take(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
    out = v.get<std::int64_t>();
  }
  void read(const char* key, bool& out) {
    const json& v = take(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "must be true or false");
    out = v.get<bool>();
  }
  void read(const char* key, std::array<double, kDetectorCount>& out) {
    const json& v = take(key);
    if (!v.is_array() || v.size() != kDetectorCount)
      throw ConfigError(field(key), "must be an array of 4 numbers (H, V, D, A)");
    for (std::size_t i = 0; i < kDetectorCount; ++i) {
      if (!v[i].is_number())
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "must be a number");
      out[i] = v[i].get<double>();
    }
  }
  void read(const char* key, DoubleClickPolicy& out) {
    const json& v = take(key);
    if (v == "random_bit") {
      out = DoubleClickPolicy::random_bit;
    } else if (v == "discard") {
      out = DoubleClickPolicy::discard;
    } else {
      throw ConfigError(field(key), "must be \"random_bit\" or \"discard\"");
    }
  }
  void read(const char* key, std::optional<double>& out) {
    const json& v = take(key);
    if (v == "all") {
      out.reset();
    } else if (v.is_number()) {
      out = v.get<double>();
    } else {
      throw ConfigError(field(key), "must be a number or \"all\"");
    }
  }

  const json& take(const char* key) {
    seen_.insert(key);
    return node_.at(key);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_source(Section s, SourceConfig& c) {
  s.required("rep_rate_hz", c.rep_rate_hz);
  s.optional("pulse_fwhm_ps", c.pulse_fwhm_ps);
  s.optional("wavelength_nm", c.wavelength_nm);
  s.required("mu_per_state", c.mu_per_state);
  s.optional("rng_seed", c.rng_seed);
  s.finish();
}

void read_channel(Section s, ChannelConfig& c) {
  s.required("distance_m", c.distance_m);
  s.required("tx_beam_diameter_e2_cm", c.tx_beam_diameter_e2_cm);
  s.required("rx_aperture_diameter_e2_cm", c.rx_aperture_diameter_e2_cm);
  s.required("visibility_km", c.visibility_km);
  s.optional("extra_loss_db", c.extra_loss_db);
  s.optional("retro_mode", c.retro_mode);
  s.optional("splitter_penalty_db", c.splitter_penalty_db);
  s.optional("retro_polarization_flip_prob", c.retro_polarization_flip_prob);
  s.optional("fading_sigma", c.fading_sigma);
  s.optional("fading_block_ms", c.fading_block_ms);
  s.optional("propagation_delay_ps", c.propagation_delay_ps);
  s.optional("rng_seed", c.rng_seed);
  s.finish();
}

void read_receiver(Section s, ReceiverConfig& c) {
  s.required("efficiency_db", c.efficiency_db);
  s.optional("misalignment_deg", c.misalignment_deg);
  s.required("background_rate_cps_per_apd", c.background_rate_cps_per_apd);
  s.optional("jitter_fwhm_ps", c.jitter_fwhm_ps);
  s.optional("dead_time_ns", c.dead_time_ns);
  s.optional("tag_resolution_ps", c.tag_resolution_ps);
  s.optional("double_click_policy", c.double_click_policy);
  s.optional("rng_seed", c.rng_seed);
  s.finish();
}

void read_sync(Section s, SyncSettings& c) {
  s.optional("gate_width_ps", c.gate.gate_width_ps);
  std::uint64_t blocks = c.block_count;
  s.optional("block_count", blocks);
  c.block_count = static_cast<std::size_t>(blocks);
  std::uint64_t bins = c.histogram_bins;
  s.optional("histogram_bins", bins);
  c.histogram_bins = static_cast<std::size_t>(bins);
  if (s.has("true_clock")) {
    Section clock = s.child("true_clock");
    clock.optional("offset_ps", c.true_clock.offset_ps);
    clock.optional("drift_ppm", c.true_clock.drift_ppm);
    clock.finish();
  }
  s.optional("beacon_assisted", c.beacon_assisted);
  s.optional("max_drift_ppm", c.max_drift_ppm);
  s.finish();
}

void read_protocol(Section s, protocol::SessionParams& c) {
  s.optional("session_id", c.session_id);
  s.optional("qber_abort_threshold", c.qber_abort_threshold);
  s.optional("sample_fraction", c.sample_fraction);
  s.optional("rng_seed", c.rng_seed);
  s.finish();
}

std::string_view policy_name(DoubleClickPolicy p) {
  return p == DoubleClickPolicy::discard ? "discard" : "random_bit";
}

}  // namespace

std::string Scenario::name() const {
  const auto it = metadata.find("name");
  return it == metadata.end() ? std::string("unnamed") : it->second;
}

std::uint64_t Scenario::n_pulses() const {
  return static_cast<std::uint64_t>(std::llround(duration_s * source.rep_rate_hz));
}

void Scenario::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw ConfigError("duration_s", "must be > 0");
  source.validate();
  channel.validate();
  receiver.validate();
  sync.gate.validate(source.period_ps());
  sync.true_clock.validate();
  if (sync.block_count < 2) throw ConfigError("sync.block_count", "must be >= 2");
  if (sync.histogram_bins < 2) throw ConfigError("sync.histogram_bins", "must be >= 2");
  if (!(sync.max_drift_ppm > 0.0 && sync.max_drift_ppm <= 100.0))
    throw ConfigError("sync.max_drift_ppm", "must be in (0, 100]");
  if (n_pulses() == 0) throw ConfigError("duration_s", "shorter than one pulse period");
  protocol.validate();
}

Scenario Scenario::with_seed(std::uint64_t seed) const {
  Scenario s = *this;
  s.source.rng_seed = derive_seed(seed, "source");
  s.channel.rng_seed = derive_seed(seed, "channel");
  s.receiver.rng_seed = derive_seed(seed, "receiver");
  s.protocol.rng_seed = derive_seed(seed, "protocol");
  return s;
}

Scenario Scenario::with_duration(double seconds) const {
  Scenario s = *this;
  s.duration_s = seconds;
  s.protocol.n_pulses = s.n_pulses();
  return s;
}

ordered_json to_json(const Scenario& s) {
  ordered_json j;
  j["metadata"] = ordered_json::object();
  for (const auto& [k, v] : s.metadata) j["metadata"][k] = v;
  j["duration_s"] = s.duration_s;
  j["source"] = {
      {"rep_rate_hz", s.source.rep_rate_hz},
      {"pulse_fwhm_ps", s.source.pulse_fwhm_ps},
      {"wavelength_nm", s.source.wavelength_nm},
      {"mu_per_state", s.source.mu_per_state},
      {"rng_seed", s.source.rng_seed},
  };
  const ChannelConfig& c = s.channel;
  j["channel"] = {
      {"distance_m", c.distance_m},
      {"tx_beam_diameter_e2_cm", c.tx_beam_diameter_e2_cm},
      {"rx_aperture_diameter_e2_cm", c.rx_aperture_diameter_e2_cm},
      {"visibility_km", c.visibility_km},
      {"extra_loss_db", c.extra_loss_db},
      {"retro_mode", c.retro_mode},
      {"splitter_penalty_db", c.splitter_penalty_db},
      {"retro_polarization_flip_prob", c.retro_polarization_flip_prob},
      {"fading_sigma", c.fading_sigma},
      {"fading_block_ms", c.fading_block_ms},
      {"propagation_delay_ps", c.propagation_delay_ps},
      {"rng_seed", c.rng_seed},
  };
  const ReceiverConfig& r = s.receiver;
  j["receiver"] = {
      {"efficiency_db", r.efficiency_db},
      {"misalignment_deg", r.misalignment_deg},
      {"background_rate_cps_per_apd", r.background_rate_cps_per_apd},
      {"jitter_fwhm_ps", r.jitter_fwhm_ps},
      {"dead_time_ns", r.dead_time_ns},
      {"tag_resolution_ps", r.tag_resolution_ps},
      {"double_click_policy", policy_name(r.double_click_policy)},
      {"rng_seed", r.rng_seed},
  };
  j["sync"] = {
      {"gate_width_ps", s.sync.gate.gate_width_ps},
      {"block_count", s.sync.block_count},
      {"histogram_bins", s.sync.histogram_bins},
      {"true_clock",
       {{"offset_ps", s.sync.true_clock.offset_ps}, {"drift_ppm", s.sync.true_clock.drift_ppm}}},
      {"beacon_assisted", s.sync.beacon_assisted},
      {"max_drift_ppm", s.sync.max_drift_ppm},
  };
  j["protocol"] = {
      {"session_id", s.protocol.session_id},
      {"qber_abort_threshold", s.protocol.qber_abort_threshold},
      {"rng_seed", s.protocol.rng_seed},
  };
  if (s.protocol.sample_fraction) {
    j["protocol"]["sample_fraction"] = *s.protocol.sample_fraction;
  } else {
    j["protocol"]["sample_fraction"] = "all";
  }
  return j;
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  Section root(j, "");
  if (root.has("metadata")) {
    const json& meta = j.at("metadata");
    if (!meta.is_object()) throw ConfigError("metadata", "must be an object");
    for (const auto& [k, v] : meta.items()) {
      if (!v.is_string()) throw ConfigError("metadata." + k, "must be a string");
      s.metadata[k] = v.get<std::string>();
    }
    root.child("metadata");
  }
  root.required("duration_s", s.duration_s);
  read_source(root.child("source"), s.source);
  read_channel(root.child("channel"), s.channel);
  read_receiver(root.child("receiver"), s.receiver);
  read_sync(root.child("sync"), s.sync);
  if (root.has("protocol")) read_protocol(root.child("protocol"), s.protocol);
  root.finish();
  s.protocol.n_pulses = s.n_pulses();
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open scenario file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

std::uint64_t scenario_hash(const Scenario& scenario) {
  const std::string text = to_json(scenario).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace qkd
