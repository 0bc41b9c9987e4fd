#include <doctest.h>

#include <sstream>
#include <stdexcept>
#include <vector>

#include "qkd/dump.hpp"

using namespace qkd;

TEST_CASE("pulse dump round-trips with a saturating photon count") {
  SourceConfig cfg;
  cfg.mu_per_state = {0.5, 0.5, 0.5, 0.5};
  const auto train = build_pulse_train(cfg, 5'000);
  std::stringstream buf;
  write_pulse_dump(buf, train);
  CHECK(buf.str().size() == train.size() * kPulseRecordBytes);
  CHECK(read_pulse_dump(buf) == train);

  std::stringstream big;
  write_pulse_record(big, {7, Basis::diagonal, 1, 1'000, -42});
  const auto back = read_pulse_dump(big);
  REQUIRE(back.size() == 1);
  CHECK(back[0].photon_count == 255);
  CHECK(back[0].emit_time_ps == -42);
}

TEST_CASE("pulse record layout is little-endian") {
  std::stringstream buf;
  write_pulse_record(buf, {0x0102, Basis::diagonal, 1, 3, 0x0A0B});
  const std::string s = buf.str();
  REQUIRE(s.size() == kPulseRecordBytes);
  CHECK(static_cast<unsigned char>(s[0]) == 0x02);
  CHECK(static_cast<unsigned char>(s[1]) == 0x01);
  CHECK(s[8] == 1);
  CHECK(s[9] == 1);
  CHECK(s[10] == 3);
  CHECK(static_cast<unsigned char>(s[11]) == 0x0B);
  CHECK(static_cast<unsigned char>(s[12]) == 0x0A);
}

TEST_CASE("tag dump round-trips and drops ground truth") {
  const std::vector<TimeTag> tags{{-5, Detector::A, 3}, {0, Detector::H, -1}, {1LL << 40, Detector::V, 9}};
  std::stringstream buf;
  write_tag_dump(buf, tags);
  CHECK(buf.str().size() == tags.size() * kTagRecordBytes);
  const auto back = read_tag_dump(buf);
  REQUIRE(back.size() == tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    CHECK(back[i].time_ps == tags[i].time_ps);
    CHECK(back[i].detector == tags[i].detector);
    CHECK(back[i].source_pulse == -1);
  }
}

TEST_CASE("truncated and invalid dumps are rejected") {
  std::stringstream tags;
  write_tag_dump(tags, std::vector<TimeTag>{{1, Detector::H, -1}});
  std::string s = tags.str();
  std::stringstream truncated(s.substr(0, s.size() - 1));
  CHECK_THROWS_AS(read_tag_dump(truncated), std::runtime_error);
  s[0] = 7;
  std::stringstream bad_channel(s);
  CHECK_THROWS_AS(read_tag_dump(bad_channel), std::runtime_error);

  std::stringstream pulses;
  write_pulse_record(pulses, {1, Basis::rectilinear, 0, 0, 0});
  std::string p = pulses.str();
  p[9] = 2;
  std::stringstream bad_bit(p);
  CHECK_THROWS_AS(read_pulse_dump(bad_bit), std::runtime_error);

  std::stringstream empty;
  CHECK(read_tag_dump(empty).empty());
}
