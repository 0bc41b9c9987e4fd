#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "qkd/protocol/transport.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBinary = QKDSIM_BINARY;
const std::string kScenarios = QKDSIM_SCENARIO_DIR;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh scratch directory per call.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qkdsim_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result invoke(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = kBinary + " " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string scenario(const std::string& name) { return kScenarios + "/" + name + ".json"; }

std::uint16_t free_port() {
  qkd::protocol::TcpListener probe("127.0.0.1", 0);
  return probe.port();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

/// Runs Bob listening and Alice connecting, each in its own process.
std::pair<Result, Result> run_parties(const std::string& alice_args, const std::string& bob_args,
                                      const fs::path& dir) {
  const std::string endpoint = "127.0.0.1:" + std::to_string(free_port());
  fs::create_directories(dir / "alice");
  fs::create_directories(dir / "bob");
  Result bob;
  std::thread t([&] {
    bob = invoke("party --role bob --listen " + endpoint + " --out '" + (dir / "bob").string() + "' " +
                     bob_args,
                 dir / "bob");
  });
  const Result alice = invoke("party --role alice --connect " + endpoint + " --out '" +
                                  (dir / "alice").string() + "' " + alice_args,
                              dir / "alice");
  t.join();
  return {alice, bob};
}

}  // namespace

TEST_CASE("run writes reproducible reports") {
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  const std::string args = "run --scenario " + scenario("table2_beam_expanders") + " --duration 0.2 --seed 3";
  const Result ra = invoke(args + " --out '" + a.string() + "'", a);
  const Result rb = invoke(args + " --out '" + b.string() + "'", b);
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  for (const char* f : {"alice_report.json", "bob_report.json", "predicted.json", "deviation.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto bob = read_json(a / "bob_report.json");
  CHECK(bob["status"] == "completed");
  CHECK(bob["sifted_bits"].get<std::uint64_t>() > 0);
  CHECK(ra.out.find("bob: completed") != std::string::npos);
}

TEST_CASE("run writes CSV and dumps on request") {
  const auto d = scratch("run_csv");
  const Result r = invoke("run --scenario " + scenario("table1_run1") + " --duration 0.1 --format csv" +
                              " --dump-tags '" + (d / "tags.bin").string() + "' --dump-histogram '" +
                              (d / "hist.csv").string() + "' --dump-pulses '" + (d / "pulses.bin").string() +
                              "' --pulse-dump-limit 1000 --out '" + d.string() + "'",
                          d);
  REQUIRE(r.code == 0);
  CHECK(slurp(d / "bob_report.csv").rfind("field,value\n", 0) == 0);
  CHECK(fs::file_size(d / "tags.bin") % 9 == 0);
  CHECK(fs::file_size(d / "tags.bin") > 0);
  CHECK(fs::file_size(d / "pulses.bin") == 1000 * 19);
  CHECK(slurp(d / "hist.csv").rfind("bin_start_ps,count\n", 0) == 0);
}

TEST_CASE("networked parties reproduce the in-process run") {
  const auto d = scratch("party");
  const std::string common = "--scenario " + scenario("table2_beam_expanders") + " --duration 0.2 --seed 3";
  const Result local = invoke("run " + common + " --out '" + d.string() + "'", d);
  REQUIRE(local.code == 0);
  const auto [alice, bob] = run_parties(common, common, d);
  CHECK(alice.code == 0);
  CHECK(bob.code == 0);
  CHECK(slurp(d / "alice" / "alice_report.json") == slurp(d / "alice_report.json"));
  CHECK(slurp(d / "bob" / "bob_report.json") == slurp(d / "bob_report.json"));
}

TEST_CASE("Bob can replay Alice's tag dump") {
  const auto d = scratch("replay");
  const std::string common = "--scenario " + scenario("table1_run2") + " --duration 0.5";
  const Result local = invoke("run " + common + " --out '" + d.string() + "'", d);
  REQUIRE(local.code == 0);
  const fs::path tags = d / "replay.bin";
  // Alice writes the dump before she starts listening for Bob.
  const Result writer = invoke("party --role alice --listen 127.0.0.1:" + std::to_string(free_port()) +
                                   " --timeout-ms 1 --write-tags '" + tags.string() + "' " + common +
                                   " --out '" + d.string() + "'",
                               d);
  CHECK(writer.code == 1);
  REQUIRE(fs::exists(tags));
  const auto [alice, bob] = run_parties(common, common + " --tags '" + tags.string() + "'", d);
  CHECK(alice.code == 0);
  CHECK(bob.code == 0);
  CHECK(slurp(d / "bob" / "bob_report.json") == slurp(d / "bob_report.json"));
}

TEST_CASE("differing scenarios abort on both sides") {
  const auto d = scratch("mismatch");
  const std::string common = "--scenario " + scenario("table2_beam_expanders") + " --duration 0.01";
  const auto [alice, bob] = run_parties(common + " --seed 1", common + " --seed 2", d);
  CHECK(alice.code == 0);
  CHECK(bob.code == 0);
  for (const char* role : {"alice", "bob"}) {
    const auto j = read_json(d / role / (std::string(role) + "_report.json"));
    CHECK(j["status"] == "aborted");
    CHECK(j["abort_reason"] == "parameter_mismatch");
  }
}

TEST_CASE("listening party gives up after the timeout") {
  const auto d = scratch("timeout");
  const Result r = invoke("party --role bob --listen 127.0.0.1:" + std::to_string(free_port()) +
                              " --timeout-ms 200 --scenario " + scenario("table2_beam_expanders") +
                              " --duration 0.01 --out '" + d.string() + "'",
                          d);
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
  CHECK_FALSE(fs::exists(d / "bob_report.json"));
}

TEST_CASE("predict prints the link budget") {
  const auto d = scratch("predict");
  auto j = read_json(scenario("table2_beam_expanders"));
  j["source"]["mu_per_state"] = {0.0, 0.0, 0.0, 0.0};
  j["receiver"]["background_rate_cps_per_apd"] = 0.0;
  std::ofstream(d / "dark.json") << j.dump(2);
  const Result r = invoke("predict --scenario '" + (d / "dark.json").string() + "'", d);
  REQUIRE(r.code == 0);
  const auto m = nlohmann::json::parse(r.out);
  CHECK(m["sifted_rate_bps"] == 0.0);
  CHECK(m["qber_total"] == 0.0);

  const Result csv = invoke("predict --format csv --scenario " + scenario("table1_run1"), d);
  CHECK(csv.code == 0);
  CHECK(csv.out.find("/sifted_rate_bps,") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2") {
  const auto d = scratch("config");
  auto j = read_json(scenario("table2_beam_expanders"));
  j["channel"].erase("visibility_km");
  std::ofstream(d / "broken.json") << j.dump(2);
  const Result missing = invoke("predict --scenario '" + (d / "broken.json").string() + "'", d);
  CHECK(missing.code == 2);
  CHECK(missing.err.find("channel.visibility_km") != std::string::npos);

  CHECK(invoke("run --scenario '" + (d / "nope.json").string() + "'", d).code == 2);
  CHECK(invoke("party --role bob --scenario " + scenario("table1_run1"), d).code == 2);
  CHECK(invoke("party --role carol --connect 127.0.0.1:1 --scenario " + scenario("table1_run1"), d).code == 2);
  CHECK(invoke("run --scenario " + scenario("table1_run1") + " --format xml", d).code == 2);
  CHECK(invoke("frobnicate", d).code == 2);
  CHECK(invoke("--help", d).code == 0);
}
