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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "peristalsim/config.hpp"
#include "peristalsim/session.hpp"
#include "peristalsim/waveforms.hpp"

namespace peristalsim::protocol {

inline constexpr int kSchemaVersion = 1;

/// Operator-facing description of a pattern, as the pattern designer and
/// the `start` command carry it.
struct PatternDraft {
  waveforms::PatternKind kind = waveforms::PatternKind::Peristaltic;
  double frequency_hz = 0.2;
  double amplitude_fraction = 1.0;
  double onset_delay_s = 0.25;
  std::size_t start_actuator = 1;
  waveforms::Direction direction = waveforms::Direction::DistalToProximal;
  double duration_s = 60.0;
  std::optional<double> squeeze_time_s;  // sequential squeeze only

  void validate() const;
};

/// Strict parse; unknown keys and wrong types throw ValidationError.
PatternDraft draft_from_json(const nlohmann::json& doc);

/**
 * Canonical pattern document: keys in lexicographic order, no whitespace,
 * numbers in shortest round-trip fixed notation with integral values
 * written without a fraction. The UI produces the same bytes for the same
 * draft.
 */
std::string to_canonical_json(const PatternDraft& draft);

/// Shortest round-trip fixed-notation rendering of a finite double.
std::string canonical_number(double v);

waveforms::PatternSchedule build_schedule(const PatternDraft& draft, const DeviceConfig& config);

struct Command {
  session::Event event;
  std::optional<PatternDraft> pattern;
};

/// Parses one newline-delimited command message.
Command parse_command(std::string_view line);

/// Applies a command; illegal transitions throw StateError, bad patterns
/// ValidationError. Nothing changes when it throws.
void apply_command(session::Session& session, const Command& command);

std::string encode_frame(const session::TelemetryFrame& frame);
std::string encode_error(std::string_view message, session::State state);

}  // namespace peristalsim::protocol
