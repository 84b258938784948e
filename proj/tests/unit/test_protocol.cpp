// Copyright 2026 The Peristalsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>

#include "doctest.h"
#include "peristalsim/errors.hpp"
#include "peristalsim/protocol.hpp"
#include "support/oracle.hpp"

using namespace peristalsim;
using namespace peristalsim::protocol;
using nlohmann::json;

TEST_CASE("shared pattern vectors") {
  const auto vectors = test::load_json(test::source_path("schema/vectors/pattern_vectors.json"));
  REQUIRE(vectors.at("valid").size() >= 5);
  for (const auto& c : vectors.at("valid")) {
    CAPTURE(c.at("name").get<std::string>());
    const auto expected = c.at("canonical").get<std::string>();
    const auto draft = draft_from_json(c.at("input"));
    CHECK(to_canonical_json(draft) == expected);
    // canonical documents are a fixed point
    CHECK(to_canonical_json(draft_from_json(json::parse(expected))) == expected);
  }
  for (const auto& c : vectors.at("invalid")) {
    CAPTURE(c.at("name").get<std::string>());
    try {
      draft_from_json(c.at("input"));
      FAIL("accepted an invalid draft");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(c.at("error").get<std::string>()) != std::string::npos);
    }
  }
}

TEST_CASE("shared wavelength vectors") {
  const auto vectors =
      test::load_json(test::source_path("schema/vectors/wavelength_vectors.json"));
  for (const auto& c : vectors.at("cases")) {
    const double lam = waveforms::wavelength_from_delay(c.at("pitch_m"), c.at("frequency_hz"),
                                                        c.at("onset_delay_s"));
    if (c.at("wavelength_m").is_null()) {
      CHECK(std::isinf(lam));
    } else {
      CHECK(lam == doctest::Approx(c.at("wavelength_m").get<double>()).epsilon(1e-15));
    }
  }
}

TEST_CASE("canonical numbers") {
  CHECK(canonical_number(0.0) == "0");
  CHECK(canonical_number(-0.0) == "0");
  CHECK(canonical_number(1.0) == "1");
  CHECK(canonical_number(0.1) == "0.1");
  CHECK(canonical_number(0.1 + 0.2) == "0.30000000000000004");
  CHECK(canonical_number(1e-7) == "0.0000001");
  CHECK(canonical_number(-2.5) == "-2.5");
  CHECK_THROWS_AS(canonical_number(std::numeric_limits<double>::infinity()), ValidationError);
  CHECK_THROWS_AS(canonical_number(std::nan("")), ValidationError);
  // round trip through a JSON parser
  for (double v : {0.2, 1.0 / 3.0, 123456.789, 5e-324, 1.7976931348623157e308}) {
    CHECK(json::parse(canonical_number(v)).get<double>() == v);
  }
}

TEST_CASE("draft defaults render the calibrated regime") {
  const PatternDraft d;
  CHECK(to_canonical_json(d) ==
        R"({"amplitude_fraction":1,"direction":"distal_to_proximal","duration_s":60,)"
        R"("frequency_hz":0.2,"kind":"peristaltic","onset_delay_s":0.25,"start_actuator":1,"v":1})");
}

TEST_CASE("schedule from a draft") {
  const DeviceConfig cfg;
  PatternDraft d;
  d.amplitude_fraction = 0.5;
  d.duration_s = 5;
  const auto s = build_schedule(d, cfg);
  CHECK(s.command.amplitude_rad == doctest::Approx(0.5 * cfg.device.crank.half_range_rad()));
  CHECK(s.num_samples() == 500);
  CHECK(s.command.num_actuators == 8);
  d.start_actuator = 9;
  CHECK_THROWS_AS(build_schedule(d, cfg), ValidationError);
}

TEST_CASE("command parsing") {
  using session::Event;
  CHECK(parse_command(R"({"cmd":"don1"})").event == Event::Don1);
  CHECK(parse_command(R"({"cmd":"don2","v":1})").event == Event::Don2);
  CHECK(parse_command(R"({"cmd":"stop"})").event == Event::Stop);
  CHECK(parse_command(R"( {"cmd":"estop"} )").event == Event::EStop);
  CHECK(parse_command(R"({"cmd":"reset"})").event == Event::Reset);
  const auto start = parse_command(
      R"({"cmd":"start","pattern":{"kind":"peristaltic","frequency_hz":0.5,"amplitude_fraction":1,)"
      R"("onset_delay_s":0.1,"start_actuator":1,"direction":"distal_to_proximal","duration_s":3}})");
  CHECK(start.event == Event::Start);
  REQUIRE(start.pattern);
  CHECK(start.pattern->frequency_hz == 0.5);

  for (const char* bad : {"", "{", "[]", "42", R"({"cmd":3})", R"({"command":"don1"})",
                          R"({"cmd":"fly"})", R"({"cmd":"start"})",
                          R"({"cmd":"stop","pattern":{}})", R"({"cmd":"don1","v":2})",
                          R"({"cmd":"don1","extra":true})"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_command(bad), ValidationError);
  }
}

TEST_CASE("applying commands") {
  const DeviceConfig cfg;
  session::Session s(cfg);
  apply_command(s, parse_command(R"({"cmd":"don1"})"));
  CHECK(s.state() == session::State::DonningStep1);
  CHECK_THROWS_AS(apply_command(s, parse_command(R"({"cmd":"reset"})")), StateError);
  const auto start = parse_command(
      R"({"cmd":"start","pattern":{"kind":"peristaltic","frequency_hz":0.5,"amplitude_fraction":1,)"
      R"("onset_delay_s":0.1,"start_actuator":1,"direction":"distal_to_proximal","duration_s":3}})");
  CHECK_THROWS_AS(apply_command(s, start), StateError);
  s.run_until_quiescent();
  apply_command(s, parse_command(R"({"cmd":"don2"})"));
  s.run_until_quiescent();
  apply_command(s, start);
  CHECK(s.state() == session::State::Running);
  try {
    apply_command(s, start);
    FAIL("expected busy");
  } catch (const StateError& e) {
    CHECK(std::string(e.what()).find("busy") != std::string::npos);
  }
}

TEST_CASE("wire encoding") {
  const auto err = json::parse(encode_error("nope", session::State::Ready));
  CHECK(err == json{{"v", 1}, {"error", "nope"}, {"state", "Ready"}});
  const DeviceConfig cfg;
  session::Session s(cfg);
  const auto text = encode_frame(s.snapshot());
  CHECK(text.find('\n') == std::string::npos);
  const auto frame = json::parse(text);
  CHECK(frame.at("v") == 1);
  CHECK(frame.at("t") == 0.0);
  CHECK(frame.at("actuators").at(0).contains("r"));
  CHECK(frame.at("motors").at(0).contains("tau"));
}
