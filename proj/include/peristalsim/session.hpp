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
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "peristalsim/config.hpp"
#include "peristalsim/errors.hpp"
#include "peristalsim/transport.hpp"
#include "peristalsim/waveforms.hpp"

namespace peristalsim::session {

enum class State { Idle, DonningStep1, DonningStep2, Ready, Running, Faulted };
enum class Event { Don1, Don2, Start, Stop, EStop, Reset };

std::string_view to_string(State s);
std::string_view to_string(Event e);

/// State an event leads to, or nullopt when the event is illegal there.
/// DonningStep2 -> Ready and Running -> Ready at schedule end happen inside
/// tick() and are not events.
std::optional<State> transition(State from, Event event);

/// A schedule that would break the safety limits, with the first offender.
class ScheduleRejected : public ValidationError {
 public:
  ScheduleRejected(const std::string& what, std::size_t actuator, double t_s)
      : ValidationError(what), actuator_(actuator), t_s_(t_s) {}
  std::size_t actuator() const { return actuator_; }  // one-based
  double t_s() const { return t_s_; }

 private:
  std::size_t actuator_;
  double t_s_;
};

struct ActuatorTelemetry {
  double radius_m;
  double pressure_pa;
  double volume_m3;
};

struct MotorTelemetry {
  double alpha_rad;
  double piston_m;
  double torque_nm;
  double chamber_a_m3;
  double chamber_b_m3;
};

struct TelemetryFrame {
  double t_s = 0.0;
  std::vector<ActuatorTelemetry> actuators;
  std::vector<MotorTelemetry> motors;
  double cumulative_volume_m3 = 0.0;
  State state = State::Idle;
  std::string fault;
};

/// Wire form of a frame, schema version 1.
nlohmann::json frame_to_json(const TelemetryFrame& frame);

/// Throws ScheduleRejected if any sample exceeds the pressure cap or the
/// pattern runs faster than the frequency cap.
void validate_schedule(const DeviceConfig& config, const waveforms::PatternSchedule& schedule);

/**
 * The virtual device.
 *
 * A fixed-step loop owns every piece of mutable state. Crank angles slew
 * toward their targets no faster than the servo's no-load speed; routed
 * volumes go through the pressure-volume law and the limb compliance to give
 * the per-actuator observables. Commands that are illegal in the current
 * state throw StateError and change nothing.
 */
class Session {
 public:
  explicit Session(DeviceConfig config);

  State state() const { return state_; }
  double time_s() const;
  const DeviceConfig& config() const { return config_; }
  const std::string& fault() const { return fault_; }

  void don_step1();
  void don_step2();
  void start(waveforms::PatternSchedule schedule);
  /// Leaves Running at the next schedule sample boundary.
  void stop();
  /// Freezes the cranks where they are and latches Faulted.
  void estop(std::string reason = "operator e-stop");
  void reset();
  /// Dispatches an event; start is rejected here since it needs a schedule.
  void apply(Event event);

  /// Advances one step. Returns a frame on telemetry ticks and whenever the
  /// safety monitor trips. A trip reports the offending frame once, then
  /// returns the cranks to their last in-limit angles and holds them.
  std::optional<TelemetryFrame> tick();

  /// Frame for the current instant without advancing the clock.
  TelemetryFrame snapshot() const;

  /// No motion pending: the controller waits for a command.
  bool quiescent() const;

  /// Ticks until quiescent or `max_steps` elapse, collecting frames.
  std::vector<TelemetryFrame> run_until_quiescent(std::size_t max_steps = 100'000'000);

 private:
  void require(Event event) const;
  void set_targets_for_chamber(drivetrain::Chamber chamber);
  bool settled() const;
  TelemetryFrame make_frame() const;

  DeviceConfig config_;
  State state_ = State::Idle;
  std::string fault_;
  std::uint64_t step_ = 0;
  std::vector<double> alpha_;
  std::vector<double> target_;
  std::optional<waveforms::PatternSchedule> schedule_;
  transport::Regime regime_;
  std::uint64_t run_start_step_ = 0;
  bool stop_pending_ = false;
  double transported_m3_ = 0.0;
};

/// Writes frames as CSV, one row per frame.
class CsvRecorder {
 public:
  CsvRecorder(std::ostream& out, std::size_t num_actuators, std::size_t num_motors);
  void write(const TelemetryFrame& frame);

 private:
  std::ostream& out_;
};

}  // namespace peristalsim::session
