#include <doctest.h>

#include "fixtures.hpp"
#include "qkd/report.hpp"
#include "qkd/simulation.hpp"

using namespace qkd;

namespace {

protocol::SessionReport sample_report() {
  protocol::SessionReport r;
  r.role = protocol::Role::bob;
  r.session_id = 7;
  r.scenario_hash = 0xFEDCBA9876543210ULL;
  r.status = "aborted";
  r.abort_reason = "qber_exceeded";
  r.abort_detail = "QBER above \"threshold\", 11%";
  r.n_pulses = 1'000'000'000;
  r.duration_s = 10.0;
  r.detected_pulses = 275'000;
  r.sifted_bits = 137'944;
  r.sifted_key_rate_bps = 13'794.4;
  r.qber = {137'944, 2'621, 2'621.0 / 137'944.0, false};
  r.tags_total = 300'000;
  r.tags_gated_out = 12'345;
  r.multi_click_pulses = 17;
  r.detector_counts = {1, 2, 3, 4};
  r.clock = {4'321.25, 1.8000123, 171.5, 10'000.0};
  r.loss = {0.5, 4.23, 0.0, 8.115, 12.845};
  r.receiver_efficiency_db = 11.96;
  return r;
}

}  // namespace

TEST_CASE("format names") {
  CHECK(parse_format("json") == ReportFormat::json);
  CHECK(parse_format("csv") == ReportFormat::csv);
  CHECK_THROWS(parse_format("xml"));
  CHECK(extension(ReportFormat::csv) == "csv");
}

TEST_CASE("session report survives JSON and CSV") {
  const auto r = sample_report();
  const auto j = to_json(r);
  CHECK(j["detector_counts"]["V"] == 2);
  CHECK(j["clock"]["drift_ppm"] == 1.8000123);
  CHECK(session_report_from_json(j) == r);
  for (ReportFormat f : {ReportFormat::json, ReportFormat::csv}) {
    const std::string text = render(j, f);
    CHECK(text.back() == '\n');
    CHECK(session_report_from_json(parse_rendered(text, f)) == r);
  }
}

TEST_CASE("CSV rows are JSON pointers with scalar values") {
  nlohmann::ordered_json doc;
  doc["a"] = 1;
  doc["b"]["c"] = "x,y";
  doc["b"]["d"] = true;
  doc["e"] = 0.1;
  const std::string csv = to_csv(doc);
  CHECK(csv == "field,value\n/a,1\n/b/c,\"\"\"x,y\"\"\"\n/b/d,true\n/e,0.1\n");
  CHECK(from_csv(csv) == nlohmann::json(doc));
  CHECK_THROWS(from_csv("wrong,header\n/a,1\n"));
}

TEST_CASE("predicted metrics and deviation reports round-trip") {
  const Scenario s = fixture::misaligned(3.0, 5);
  const auto m = predict(s);
  for (ReportFormat f : {ReportFormat::json, ReportFormat::csv}) {
    CHECK(predicted_metrics_from_json(parse_rendered(render(to_json(m), f), f)) == m);
  }
  const auto pair = run_in_process(s);
  const auto d = compare(m, pair.bob);
  for (ReportFormat f : {ReportFormat::json, ReportFormat::csv}) {
    CHECK(deviation_report_from_json(parse_rendered(render(to_json(d), f), f)) == d);
  }
}

TEST_CASE("missing report fields are named") {
  auto j = nlohmann::json(to_json(sample_report()));
  j.erase("sifted_bits");
  try {
    session_report_from_json(j);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("sifted_bits") != std::string::npos);
  }
}
