#include "qkd/report.hpp"

#include <stdexcept>

namespace qkd {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw std::runtime_error(std::string("report: missing field ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::runtime_error(std::string("report: field ") + key + " has the wrong type");
  }
}

ordered_json loss_json(const LossBreakdown& l) {
  return {{"geometric_db", l.geometric_db},
          {"atmospheric_db", l.atmospheric_db},
          {"splitter_db", l.splitter_db},
          {"extra_db", l.extra_db},
          {"total_db", l.total_db}};
}

LossBreakdown loss_from(const json& j) {
  return {field<double>(j, "geometric_db"), field<double>(j, "atmospheric_db"),
          field<double>(j, "splitter_db"), field<double>(j, "extra_db"),
          field<double>(j, "total_db")};
}

std::string csv_quote(const std::string& value) {
  if (value.find_first_of(",\"") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_unquote(std::string_view value) {
  if (value.empty() || value.front() != '"') return std::string(value);
  if (value.size() < 2 || value.back() != '"') throw std::runtime_error("csv: unterminated quote");
  std::string out;
  for (std::size_t i = 1; i + 1 < value.size(); ++i) {
    out += value[i];
    if (value[i] == '"') {
      if (i + 2 >= value.size() || value[i + 1] != '"') throw std::runtime_error("csv: stray quote");
      ++i;
    }
  }
  return out;
}

}  // namespace

ReportFormat parse_format(std::string_view text) {
  if (text == "json") return ReportFormat::json;
  if (text == "csv") return ReportFormat::csv;
  throw std::invalid_argument("unknown report format '" + std::string(text) + "' (json|csv)");
}

std::string_view extension(ReportFormat format) {
  return format == ReportFormat::csv ? "csv" : "json";
}

ordered_json to_json(const protocol::SessionReport& r) {
  ordered_json j;
  j["role"] = protocol::to_string(r.role);
  j["session_id"] = r.session_id;
  j["scenario_hash"] = r.scenario_hash;
  j["status"] = r.status;
  j["abort_reason"] = r.abort_reason;
  j["abort_detail"] = r.abort_detail;
  j["n_pulses"] = r.n_pulses;
  j["duration_s"] = r.duration_s;
  j["detected_pulses"] = r.detected_pulses;
  j["sifted_bits"] = r.sifted_bits;
  j["sifted_key_rate_bps"] = r.sifted_key_rate_bps;
  j["final_key_bits"] = r.final_key_bits;
  j["qber"] = {{"disclosed", r.qber.disclosed},
               {"errors", r.qber.errors},
               {"qber", r.qber.qber},
               {"abort", r.qber.abort}};
  j["tags_total"] = r.tags_total;
  j["tags_gated_out"] = r.tags_gated_out;
  j["tags_out_of_range"] = r.tags_out_of_range;
  j["multi_click_pulses"] = r.multi_click_pulses;
  ordered_json counts;
  for (Detector d : kAllDetectors) counts[std::string(to_string(d))] = r.detector_counts[index_of(d)];
  j["detector_counts"] = counts;
  j["clock"] = {{"offset_ps", r.clock.offset_ps},
                {"drift_ppm", r.clock.drift_ppm},
                {"residual_rms_ps", r.clock.residual_rms_ps},
                {"nominal_period_ps", r.clock.nominal_period_ps}};
  j["loss"] = loss_json(r.loss);
  j["receiver_efficiency_db"] = r.receiver_efficiency_db;
  return j;
}

protocol::SessionReport session_report_from_json(const json& j) {
  protocol::SessionReport r;
  const auto role = field<std::string>(j, "role");
  if (role == "alice") {
    r.role = protocol::Role::alice;
  } else if (role == "bob") {
    r.role = protocol::Role::bob;
  } else {
    throw std::runtime_error("report: unknown role " + role);
  }
  r.session_id = field<std::uint64_t>(j, "session_id");
  r.scenario_hash = field<std::uint64_t>(j, "scenario_hash");
  r.status = field<std::string>(j, "status");
  r.abort_reason = field<std::string>(j, "abort_reason");
  r.abort_detail = field<std::string>(j, "abort_detail");
  r.n_pulses = field<std::uint64_t>(j, "n_pulses");
  r.duration_s = field<double>(j, "duration_s");
  r.detected_pulses = field<std::uint64_t>(j, "detected_pulses");
  r.sifted_bits = field<std::uint64_t>(j, "sifted_bits");
  r.sifted_key_rate_bps = field<double>(j, "sifted_key_rate_bps");
  r.final_key_bits = field<std::uint64_t>(j, "final_key_bits");
  const json q = field<json>(j, "qber");
  r.qber = {field<std::uint64_t>(q, "disclosed"), field<std::uint64_t>(q, "errors"),
            field<double>(q, "qber"), field<bool>(q, "abort")};
  r.tags_total = field<std::uint64_t>(j, "tags_total");
  r.tags_gated_out = field<std::uint64_t>(j, "tags_gated_out");
  r.tags_out_of_range = field<std::uint64_t>(j, "tags_out_of_range");
  r.multi_click_pulses = field<std::uint64_t>(j, "multi_click_pulses");
  const json counts = field<json>(j, "detector_counts");
  for (Detector d : kAllDetectors) {
    r.detector_counts[index_of(d)] = field<std::uint64_t>(counts, std::string(to_string(d)).c_str());
  }
  const json clock = field<json>(j, "clock");
  r.clock = {field<double>(clock, "offset_ps"), field<double>(clock, "drift_ppm"),
             field<double>(clock, "residual_rms_ps"), field<double>(clock, "nominal_period_ps")};
  r.loss = loss_from(field<json>(j, "loss"));
  r.receiver_efficiency_db = field<double>(j, "receiver_efficiency_db");
  return r;
}

ordered_json to_json(const PredictedMetrics& m) {
  ordered_json j;
  j["scenario_hash"] = m.scenario_hash;
  j["n_pulses"] = m.n_pulses;
  j["duration_s"] = m.duration_s;
  j["loss"] = loss_json(m.loss);
  j["total_loss_db"] = m.total_loss_db;
  j["receiver_efficiency_db"] = m.receiver_efficiency_db;
  j["gate_acceptance_signal"] = m.gate_acceptance_signal;
  j["p_signal_click_per_pulse"] = m.p_signal_click_per_pulse;
  j["p_background_per_pulse"] = m.p_background_per_pulse;
  j["e_pol"] = m.e_pol;
  j["qber_background_part"] = m.qber_background_part;
  j["qber_misalignment_part"] = m.qber_misalignment_part;
  j["qber_total"] = m.qber_total;
  j["sifted_rate_bps"] = m.sifted_rate_bps;
  j["expected_sifted_bits"] = m.expected_sifted_bits;
  j["fading_rate_rel_variance"] = m.fading_rate_rel_variance;
  return j;
}

PredictedMetrics predicted_metrics_from_json(const json& j) {
  PredictedMetrics m;
  m.scenario_hash = field<std::uint64_t>(j, "scenario_hash");
  m.n_pulses = field<std::uint64_t>(j, "n_pulses");
  m.duration_s = field<double>(j, "duration_s");
  m.loss = loss_from(field<json>(j, "loss"));
  m.total_loss_db = field<double>(j, "total_loss_db");
  m.receiver_efficiency_db = field<double>(j, "receiver_efficiency_db");
  m.gate_acceptance_signal = field<double>(j, "gate_acceptance_signal");
  m.p_signal_click_per_pulse = field<double>(j, "p_signal_click_per_pulse");
  m.p_background_per_pulse = field<double>(j, "p_background_per_pulse");
  m.e_pol = field<double>(j, "e_pol");
  m.qber_background_part = field<double>(j, "qber_background_part");
  m.qber_misalignment_part = field<double>(j, "qber_misalignment_part");
  m.qber_total = field<double>(j, "qber_total");
  m.sifted_rate_bps = field<double>(j, "sifted_rate_bps");
  m.expected_sifted_bits = field<double>(j, "expected_sifted_bits");
  m.fading_rate_rel_variance = field<double>(j, "fading_rate_rel_variance");
  return m;
}

ordered_json to_json(const DeviationReport& d) {
  ordered_json j;
  j["scenario_hash"] = d.scenario_hash;
  j["pass"] = d.pass;
  j["metrics"] = ordered_json::array();
  for (const auto& m : d.metrics) {
    j["metrics"].push_back({{"metric", m.metric},
                            {"predicted", m.predicted},
                            {"measured", m.measured},
                            {"deviation", m.deviation},
                            {"sigma", m.sigma},
                            {"allowed", m.allowed},
                            {"pass", m.pass}});
  }
  return j;
}

DeviationReport deviation_report_from_json(const json& j) {
  DeviationReport d;
  d.scenario_hash = field<std::uint64_t>(j, "scenario_hash");
  d.pass = field<bool>(j, "pass");
  for (const json& m : field<json>(j, "metrics")) {
    d.metrics.push_back({field<std::string>(m, "metric"), field<double>(m, "predicted"),
                         field<double>(m, "measured"), field<double>(m, "deviation"),
                         field<double>(m, "sigma"), field<double>(m, "allowed"),
                         field<bool>(m, "pass")});
  }
  return d;
}

std::string to_csv(const ordered_json& document) {
  std::string out = "field,value\n";
  const auto flat = document.flatten();
  for (const auto& [pointer, value] : flat.items()) {
    out += csv_quote(pointer);
    out += ',';
    out += csv_quote(value.dump());
    out += '\n';
  }
  return out;
}

json from_csv(std::string_view csv) {
  json flat = json::object();
  bool header = true;
  while (!csv.empty()) {
    const auto eol = csv.find('\n');
    std::string_view line = csv.substr(0, eol);
    csv = eol == std::string_view::npos ? std::string_view{} : csv.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "field,value") throw std::runtime_error("csv: expected header 'field,value'");
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw std::runtime_error("csv: row without a value");
    try {
      flat[csv_unquote(line.substr(0, comma))] = json::parse(csv_unquote(line.substr(comma + 1)));
    } catch (const json::parse_error& e) {
      throw std::runtime_error(std::string("csv: bad value: ") + e.what());
    }
  }
  if (header) throw std::runtime_error("csv: empty document");
  return flat.unflatten();
}

std::string render(const ordered_json& document, ReportFormat format) {
  if (format == ReportFormat::csv) return to_csv(document);
  return document.dump(2) + "\n";
}

json parse_rendered(std::string_view text, ReportFormat format) {
  if (format == ReportFormat::csv) return from_csv(text);
  return json::parse(text);
}

}  // namespace qkd
