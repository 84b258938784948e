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

#include "peristalsim/protocol.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "peristalsim/errors.hpp"

namespace peristalsim::protocol {

namespace {

using nlohmann::json;

double get_number(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ValidationError(std::string("pattern.") + key + " is required");
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ValidationError(std::string("pattern.") + key + " must be a number");
  return v.get<double>();
}

std::string get_string(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ValidationError(std::string("pattern.") + key + " is required");
  const auto& v = doc.at(key);
  if (!v.is_string()) throw ValidationError(std::string("pattern.") + key + " must be a string");
  return v.get<std::string>();
}

}  // namespace

void PatternDraft::validate() const {
  if (!(frequency_hz > 0) || !std::isfinite(frequency_hz)) {
    throw ValidationError("frequency must be positive");
  }
  if (!(amplitude_fraction > 0 && amplitude_fraction <= 1)) {
    throw ValidationError("amplitude fraction must lie in (0, 1]");
  }
  if (!(onset_delay_s >= 0) || !std::isfinite(onset_delay_s)) {
    throw ValidationError("onset delay must be non-negative");
  }
  if (start_actuator < 1) throw ValidationError("start actuator must be >= 1");
  if (!(duration_s > 0) || !std::isfinite(duration_s)) {
    throw ValidationError("duration must be positive");
  }
  const bool squeeze = kind == waveforms::PatternKind::SequentialSqueeze;
  if (squeeze && !(squeeze_time_s && *squeeze_time_s > 0 && std::isfinite(*squeeze_time_s))) {
    throw ValidationError("sequential squeeze needs a positive squeeze time");
  }
  if (!squeeze && squeeze_time_s) {
    throw ValidationError("squeeze time only applies to sequential squeeze");
  }
  if (kind == waveforms::PatternKind::AllInPhase && onset_delay_s != 0.0) {
    throw ValidationError("all-in-phase patterns have zero onset delay");
  }
}

PatternDraft draft_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("pattern must be an object");
  static const std::set<std::string> allowed = {
      "amplitude_fraction", "direction",     "duration_s",     "frequency_hz", "kind",
      "onset_delay_s",      "squeeze_time_s", "start_actuator", "v"};
  for (const auto& [key, _] : doc.items()) {
    if (!allowed.contains(key)) throw ValidationError("pattern: unknown field '" + key + "'");
  }
  if (doc.contains("v") && doc.at("v") != kSchemaVersion) {
    throw ValidationError("pattern: unsupported schema version");
  }
  PatternDraft d;
  d.kind = waveforms::kind_from_string(get_string(doc, "kind"));
  d.frequency_hz = get_number(doc, "frequency_hz");
  d.amplitude_fraction = get_number(doc, "amplitude_fraction");
  d.onset_delay_s = get_number(doc, "onset_delay_s");
  d.duration_s = get_number(doc, "duration_s");
  d.direction = waveforms::direction_from_string(get_string(doc, "direction"));
  const auto& start = doc.contains("start_actuator") ? doc.at("start_actuator") : json();
  if (!start.is_number_integer() || start.get<long long>() < 1) {
    throw ValidationError("pattern.start_actuator must be a positive integer");
  }
  d.start_actuator = static_cast<std::size_t>(start.get<long long>());
  if (doc.contains("squeeze_time_s")) d.squeeze_time_s = get_number(doc, "squeeze_time_s");
  d.validate();
  return d;
}

std::string canonical_number(double v) {
  if (!std::isfinite(v)) throw ValidationError("pattern numbers must be finite");
  if (v == 0.0) return "0";
  // fixed notation of the extreme doubles runs to 326 characters
  char buf[400];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (res.ec != std::errc()) throw ValidationError("number cannot be rendered");
  return std::string(buf, res.ptr);
}

std::string to_canonical_json(const PatternDraft& d) {
  d.validate();
  const auto quoted = [](std::string_view s) { return "\"" + std::string(s) + "\""; };
  std::string out = "{";
  out += "\"amplitude_fraction\":" + canonical_number(d.amplitude_fraction);
  out += ",\"direction\":" + quoted(waveforms::to_string(d.direction));
  out += ",\"duration_s\":" + canonical_number(d.duration_s);
  out += ",\"frequency_hz\":" + canonical_number(d.frequency_hz);
  out += ",\"kind\":" + quoted(waveforms::to_string(d.kind));
  out += ",\"onset_delay_s\":" + canonical_number(d.onset_delay_s);
  if (d.squeeze_time_s) out += ",\"squeeze_time_s\":" + canonical_number(*d.squeeze_time_s);
  out += ",\"start_actuator\":" + std::to_string(d.start_actuator);
  out += ",\"v\":" + std::to_string(kSchemaVersion);
  out += "}";
  return out;
}

waveforms::PatternSchedule build_schedule(const PatternDraft& d, const DeviceConfig& config) {
  d.validate();
  const auto& dev = config.device;
  waveforms::WaveCommand cmd;
  cmd.amplitude_rad = d.amplitude_fraction * dev.crank.half_range_rad();
  cmd.frequency_hz = d.frequency_hz;
  cmd.onset_delay_s = d.onset_delay_s;
  cmd.num_actuators = dev.manifold.num_motors();
  cmd.start_actuator = d.start_actuator;
  cmd.direction = d.direction;
  cmd.duration_s = d.duration_s;
  waveforms::PatternOptions opts;
  opts.sample_period_s = config.simulation.sample_period_s;
  opts.squeeze_profile = config.simulation.squeeze_profile;
  if (d.squeeze_time_s) opts.squeeze_time_s = *d.squeeze_time_s;
  return waveforms::compose_pattern(d.kind, cmd, dev, opts);
}

Command parse_command(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed message: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("cmd") || !doc.at("cmd").is_string()) {
    throw ValidationError("message needs a string field 'cmd'");
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "cmd" && key != "pattern" && key != "v") {
      throw ValidationError("unknown message field '" + key + "'");
    }
  }
  if (doc.contains("v") && doc.at("v") != kSchemaVersion) {
    throw ValidationError("unsupported schema version");
  }
  const auto name = doc.at("cmd").get<std::string>();
  using session::Event;
  Command c{};
  if (name == "don1") c.event = Event::Don1;
  else if (name == "don2") c.event = Event::Don2;
  else if (name == "start") c.event = Event::Start;
  else if (name == "stop") c.event = Event::Stop;
  else if (name == "estop") c.event = Event::EStop;
  else if (name == "reset") c.event = Event::Reset;
  else throw ValidationError("unknown command '" + name + "'");
  if (c.event == Event::Start) {
    if (!doc.contains("pattern")) throw ValidationError("start needs a pattern");
    c.pattern = draft_from_json(doc.at("pattern"));
  } else if (doc.contains("pattern")) {
    throw ValidationError("only start carries a pattern");
  }
  return c;
}

void apply_command(session::Session& s, const Command& c) {
  using session::Event;
  switch (c.event) {
    case Event::Start: {
      if (s.state() == session::State::Running) throw StateError("busy: a pattern is already running");
      if (s.state() != session::State::Ready) {
        throw StateError("start is not allowed in state " + std::string(to_string(s.state())));
      }
      s.start(build_schedule(*c.pattern, s.config()));
      break;
    }
    default:
      s.apply(c.event);
  }
}

std::string encode_frame(const session::TelemetryFrame& frame) {
  return session::frame_to_json(frame).dump();
}

std::string encode_error(std::string_view message, session::State state) {
  return json{{"v", kSchemaVersion},
              {"error", std::string(message)},
              {"state", std::string(session::to_string(state))}}
      .dump();
}

}  // namespace peristalsim::protocol
