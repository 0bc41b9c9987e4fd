// qkdsim: scenario runner, networked party and link-budget predictor.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qkd/analysis.hpp"
#include "qkd/dump.hpp"
#include "qkd/report.hpp"
#include "qkd/scenario.hpp"
#include "qkd/simulation.hpp"

namespace fs = std::filesystem;
using namespace qkd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct ScenarioOptions {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;

  Scenario load() const {
    Scenario s = load_scenario(path);
    if (seed) s = s.with_seed(*seed);
    if (duration_s) s = s.with_duration(*duration_s);
    s.validate();
    return s;
  }
};

void add_scenario_options(CLI::App* cmd, ScenarioOptions& opts) {
  cmd->add_option("--scenario", opts.path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Derive every RNG seed from this value");
  cmd->add_option("--duration", opts.duration_s, "Override the simulated session duration (s)");
}

std::ofstream open_output(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_document(const fs::path& path, const nlohmann::ordered_json& doc, ReportFormat format) {
  auto out = open_output(path);
  out << render(doc, format);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("QKDSIM_OUT_DIR"); env && *env) return env;
  return ".";
}

void print_summary(const protocol::SessionReport& r) {
  std::cout << protocol::to_string(r.role) << ": " << r.status;
  if (!r.abort_reason.empty()) std::cout << " (" << r.abort_reason << ": " << r.abort_detail << ")";
  std::cout << ", sifted " << r.sifted_bits << " bits, " << r.sifted_key_rate_bps
            << " b/s, qber " << r.qber.qber << "\n";
}

struct EndpointSpec {
  std::string host;
  std::uint16_t port = 0;
};

EndpointSpec parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("endpoint", "expected HOST:PORT");
  EndpointSpec e;
  e.host = text.substr(0, colon);
  const int port = std::stoi(text.substr(colon + 1));
  if (port < 0 || port > 65535) throw CLI::ValidationError("endpoint", "port out of range");
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

struct RunOptions {
  ScenarioOptions scenario;
  std::string out_dir;
  std::string format = "json";
  std::string dump_tags;
  std::string dump_histogram;
  std::string dump_pulses;
  std::uint64_t pulse_dump_limit = 1'000'000;
};

int run_command(const RunOptions& opts) {
  const ReportFormat format = parse_format(opts.format);
  const Scenario scenario = opts.scenario.load();
  const fs::path out_dir = opts.out_dir.empty() ? default_out_dir() : fs::path(opts.out_dir);
  fs::create_directories(out_dir);

  const QuantumPhase quantum = simulate_quantum_phase(scenario);
  const SessionPair reports = run_in_process(scenario, quantum);
  const PredictedMetrics predicted = predict(scenario);
  const DeviationReport deviation = compare(predicted, reports.bob);

  const std::string ext(extension(format));
  write_document(out_dir / ("alice_report." + ext), to_json(reports.alice), format);
  write_document(out_dir / ("bob_report." + ext), to_json(reports.bob), format);
  write_document(out_dir / ("predicted." + ext), to_json(predicted), format);
  write_document(out_dir / ("deviation." + ext), to_json(deviation), format);

  if (!opts.dump_tags.empty()) {
    auto out = open_output(opts.dump_tags, true);
    write_tag_dump(out, quantum.tags);
  }
  if (!opts.dump_histogram.empty()) {
    ClockModel clock = reports.bob.clock;
    if (clock.nominal_period_ps == 0.0) clock.nominal_period_ps = scenario.source.period_ps();
    auto out = open_output(opts.dump_histogram);
    const auto hist = fold_histogram(quantum.tags, clock, scenario.sync.histogram_bins);
    write_histogram_csv(out, hist, clock.period_ps(), -0.5 * clock.period_ps());
  }
  if (!opts.dump_pulses.empty()) {
    auto out = open_output(opts.dump_pulses, true);
    const PulseSource source(scenario.source);
    const std::uint64_t n = std::min(scenario.n_pulses(), opts.pulse_dump_limit);
    for (std::uint64_t i = 0; i < n; ++i) write_pulse_record(out, source.pulse(i));
  }

  print_summary(reports.alice);
  print_summary(reports.bob);
  std::cout << "prediction " << (deviation.pass ? "agrees" : "disagrees") << " with the session";
  for (const auto& name : deviation.failures()) std::cout << " [" << name << "]";
  std::cout << "\n";
  return kExitOk;
}

struct PartyOptions {
  ScenarioOptions scenario;
  std::string role;
  std::string listen;
  std::string connect;
  std::uint64_t timeout_ms = 10'000;
  std::string out_dir;
  std::string format = "json";
  std::string tags;
  std::string write_tags;
};

int party_command(const PartyOptions& opts) {
  const ReportFormat format = parse_format(opts.format);
  const Scenario scenario = opts.scenario.load();
  const fs::path out_dir = opts.out_dir.empty() ? default_out_dir() : fs::path(opts.out_dir);
  fs::create_directories(out_dir);
  const auto timeout = std::chrono::milliseconds(opts.timeout_ms);

  // Bob's detection inputs: replayed from a tag dump or co-simulated from the shared scenario.
  std::optional<QuantumPhase> quantum;
  if (opts.role == "bob") {
    quantum.emplace();
    if (!opts.tags.empty()) {
      std::ifstream in(opts.tags, std::ios::binary);
      if (!in) throw std::runtime_error("cannot read " + opts.tags);
      quantum->tags = read_tag_dump(in);
      quantum->epoch_hint_ps = epoch_hint_ps(scenario);
    } else {
      *quantum = simulate_quantum_phase(scenario);
    }
  } else if (!opts.write_tags.empty()) {
    const QuantumPhase replay = simulate_quantum_phase(scenario);
    auto out = open_output(opts.write_tags, true);
    write_tag_dump(out, replay.tags);
  }

  std::unique_ptr<protocol::Transport> transport;
  if (!opts.listen.empty()) {
    const EndpointSpec e = parse_endpoint(opts.listen);
    protocol::TcpListener listener(e.host, e.port);
    std::cerr << "listening on " << e.host << ":" << listener.port() << "\n";
    transport = listener.accept(timeout);
  } else {
    const EndpointSpec e = parse_endpoint(opts.connect);
    transport = protocol::tcp_connect(e.host, e.port, timeout);
  }

  protocol::SessionReport report;
  if (opts.role == "alice") {
    const PulseSource source(scenario.source);
    report = protocol::run_alice(*transport, alice_context(scenario, source));
  } else {
    report = protocol::run_bob(*transport, bob_context(scenario, *quantum));
  }
  transport->close();

  write_document(out_dir / (opts.role + "_report." + std::string(extension(format))), to_json(report),
                 format);
  print_summary(report);
  return kExitOk;
}

struct PredictOptions {
  ScenarioOptions scenario;
  std::string format = "json";
  std::string out;
};

int predict_command(const PredictOptions& opts) {
  const ReportFormat format = parse_format(opts.format);
  const std::string text = render(to_json(predict(opts.scenario.load())), format);
  if (opts.out.empty()) {
    std::cout << text;
  } else {
    auto out = open_output(opts.out);
    out << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-space BB84 link simulator and protocol stack"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario end to end in one process");
  add_scenario_options(run_cmd, run.scenario);
  run_cmd->add_option("--out", run.out_dir, "Report directory (default: $QKDSIM_OUT_DIR or .)");
  run_cmd->add_option("--format", run.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  run_cmd->add_option("--dump-tags", run.dump_tags, "Write Bob's time tags (binary)");
  run_cmd->add_option("--dump-histogram", run.dump_histogram, "Write the folded tag histogram (CSV)");
  run_cmd->add_option("--dump-pulses", run.dump_pulses, "Write Alice's pulse records (binary)");
  run_cmd->add_option("--pulse-dump-limit", run.pulse_dump_limit, "Pulses written by --dump-pulses");

  PartyOptions party;
  auto* party_cmd = app.add_subcommand("party", "Run one party of a session over TCP");
  add_scenario_options(party_cmd, party.scenario);
  party_cmd->add_option("--role", party.role, "alice or bob")
      ->required()
      ->check(CLI::IsMember({"alice", "bob"}));
  auto* listen = party_cmd->add_option("--listen", party.listen, "Accept the peer on HOST:PORT");
  auto* connect = party_cmd->add_option("--connect", party.connect, "Connect to the peer at HOST:PORT");
  listen->excludes(connect);
  party_cmd->add_option("--timeout-ms", party.timeout_ms, "Listen/connect wait");
  party_cmd->add_option("--out", party.out_dir, "Report directory (default: $QKDSIM_OUT_DIR or .)");
  party_cmd->add_option("--format", party.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  party_cmd->add_option("--tags", party.tags, "Bob: replay this tag dump instead of co-simulating")
      ->check(CLI::ExistingFile);
  party_cmd->add_option("--write-tags", party.write_tags, "Alice: also write Bob's tag dump for replay");

  PredictOptions pred;
  auto* predict_cmd = app.add_subcommand("predict", "Print the analytic link-budget prediction");
  add_scenario_options(predict_cmd, pred.scenario);
  predict_cmd->add_option("--format", pred.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  predict_cmd->add_option("--out", pred.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return run_command(run);
    if (*party_cmd) {
      if (party.listen.empty() == party.connect.empty()) {
        std::cerr << "party: exactly one of --listen or --connect is required\n";
        return kExitConfig;
      }
      return party_command(party);
    }
    return predict_command(pred);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
