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

#include "peristalsim/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace peristalsim::session {

namespace {

constexpr double kSettleTolerance_rad = 1e-12;

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double interpolate(const std::vector<double>& samples, double sample_period, double t) {
  const double pos = t / sample_period;
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= samples.size()) return samples.back();
  const double s = pos - static_cast<double>(i);
  return samples[i] + s * (samples[i + 1] - samples[i]);
}

}  // namespace

std::string_view to_string(State s) {
  switch (s) {
    case State::Idle: return "Idle";
    case State::DonningStep1: return "DonningStep1";
    case State::DonningStep2: return "DonningStep2";
    case State::Ready: return "Ready";
    case State::Running: return "Running";
    case State::Faulted: return "Faulted";
  }
  return "?";
}

std::string_view to_string(Event e) {
  switch (e) {
    case Event::Don1: return "don1";
    case Event::Don2: return "don2";
    case Event::Start: return "start";
    case Event::Stop: return "stop";
    case Event::EStop: return "estop";
    case Event::Reset: return "reset";
  }
  return "?";
}

std::optional<State> transition(State from, Event event) {
  if (event == Event::EStop) return State::Faulted;
  switch (from) {
    case State::Idle:
      if (event == Event::Don1) return State::DonningStep1;
      break;
    case State::DonningStep1:
      if (event == Event::Don2) return State::DonningStep2;
      break;
    case State::DonningStep2:
      break;
    case State::Ready:
      if (event == Event::Start) return State::Running;
      break;
    case State::Running:
      if (event == Event::Stop) return State::Ready;
      break;
    case State::Faulted:
      if (event == Event::Reset) return State::Idle;
      break;
  }
  return std::nullopt;
}

nlohmann::json frame_to_json(const TelemetryFrame& f) {
  nlohmann::json actuators = nlohmann::json::array();
  for (const auto& a : f.actuators) {
    actuators.push_back({{"r", a.radius_m}, {"p", a.pressure_pa}, {"v", a.volume_m3}});
  }
  nlohmann::json motors = nlohmann::json::array();
  for (const auto& m : f.motors) {
    motors.push_back({{"alpha", m.alpha_rad}, {"x", m.piston_m}, {"tau", m.torque_nm}});
  }
  nlohmann::json j = {{"v", 1},
                      {"t", f.t_s},
                      {"state", std::string(to_string(f.state))},
                      {"actuators", std::move(actuators)},
                      {"motors", std::move(motors)},
                      {"qcum", f.cumulative_volume_m3}};
  if (!f.fault.empty()) j["fault"] = f.fault;
  return j;
}

void validate_schedule(const DeviceConfig& config, const waveforms::PatternSchedule& s) {
  const auto& m = config.device.manifold;
  if (s.motor_angle_rad.size() != m.num_motors() ||
      s.actuator_volume_m3.size() != m.num_actuators()) {
    throw ScheduleRejected("schedule was composed for a different manifold", 0, 0.0);
  }
  if (s.frequency_hz > config.safety.max_frequency_cap_hz) {
    throw ScheduleRejected("pattern frequency " + fmt_number(s.frequency_hz) +
                               " Hz exceeds the " +
                               fmt_number(config.safety.max_frequency_cap_hz) + " Hz cap",
                           0, 0.0);
  }
  const double cap = config.safety.pressure_cap_pa;
  for (std::size_t a = 0; a < s.actuator_volume_m3.size(); ++a) {
    const auto& vols = s.actuator_volume_m3[a];
    for (std::size_t i = 0; i < vols.size(); ++i) {
      const double p = actuator::pressure_from_volume(config.device.actuator, vols[i]);
      if (p > cap) {
        const double t = static_cast<double>(i) * s.sample_period_s();
        throw ScheduleRejected("actuator " + std::to_string(a + 1) + " reaches " +
                                   fmt_number(p) + " Pa at t = " + fmt_number(t) +
                                   " s, above the " + fmt_number(cap) + " Pa cap",
                               a + 1, t);
      }
    }
  }
}

Session::Session(DeviceConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto motors = config_.device.manifold.num_motors();
  alpha_.assign(motors, config_.device.crank.alpha_mid_rad());
  target_ = alpha_;
}

double Session::time_s() const {
  return static_cast<double>(step_) * config_.simulation.step_s;
}

void Session::require(Event event) const {
  if (event == Event::Start && state_ == State::Running) {
    throw StateError("busy: a pattern is already running");
  }
  if (!transition(state_, event)) {
    throw StateError(std::string(to_string(event)) + " is not allowed in state " +
                     std::string(to_string(state_)));
  }
}

void Session::set_targets_for_chamber(drivetrain::Chamber chamber) {
  const auto& m = config_.device.manifold;
  for (std::size_t i = 0; i < m.num_motors(); ++i) {
    if (m.port_load(i, chamber) > 0) {
      target_[i] = drivetrain::alpha_filling(config_.device.crank, chamber);
    }
  }
}

void Session::don_step1() {
  require(Event::Don1);
  set_targets_for_chamber(drivetrain::Chamber::A);
  state_ = State::DonningStep1;
}

void Session::don_step2() {
  require(Event::Don2);
  set_targets_for_chamber(drivetrain::Chamber::B);
  state_ = State::DonningStep2;
}

void Session::start(waveforms::PatternSchedule schedule) {
  require(Event::Start);
  validate_schedule(config_, schedule);
  regime_ = transport::regime_from_schedule(config_.limb, schedule);
  schedule_ = std::move(schedule);
  run_start_step_ = step_;
  stop_pending_ = false;
  state_ = State::Running;
}

void Session::stop() {
  require(Event::Stop);
  stop_pending_ = true;
}

void Session::estop(std::string reason) {
  target_ = alpha_;
  schedule_.reset();
  stop_pending_ = false;
  fault_ = std::move(reason);
  state_ = State::Faulted;
}

void Session::reset() {
  require(Event::Reset);
  fault_.clear();
  state_ = State::Idle;
}

void Session::apply(Event event) {
  switch (event) {
    case Event::Don1: don_step1(); break;
    case Event::Don2: don_step2(); break;
    case Event::Start:
      require(Event::Start);
      throw StateError("start needs a pattern");
    case Event::Stop: stop(); break;
    case Event::EStop: estop(); break;
    case Event::Reset: reset(); break;
  }
}

bool Session::settled() const {
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    if (std::abs(alpha_[i] - target_[i]) > kSettleTolerance_rad) return false;
  }
  return true;
}

bool Session::quiescent() const {
  switch (state_) {
    case State::Idle:
    case State::Faulted:
      return true;
    case State::Ready:
    case State::DonningStep1:
      return settled();
    case State::DonningStep2:
    case State::Running:
      return false;
  }
  return true;
}

std::optional<TelemetryFrame> Session::tick() {
  const auto& sim = config_.simulation;
  const auto& crank = config_.device.crank;
  const double dt = sim.step_s;
  ++step_;

  double run_t = 0.0;
  if (state_ == State::Running) {
    run_t = static_cast<double>(step_ - run_start_step_) * dt;
    const double sp = schedule_->sample_period_s();
    const double pos = run_t / sp;
    const bool on_boundary = std::abs(pos - std::round(pos)) < 1e-9;
    if (run_t >= schedule_->duration_s() - 1e-12 || (stop_pending_ && on_boundary)) {
      schedule_.reset();
      stop_pending_ = false;
      state_ = State::Ready;
    } else {
      for (std::size_t m = 0; m < target_.size(); ++m) {
        target_[m] = interpolate(schedule_->motor_angle_rad[m], sp, run_t);
      }
    }
  }
  if (state_ == State::Ready && sim.idle_behavior == IdleBehavior::Release) {
    for (std::size_t m = 0; m < target_.size(); ++m) {
      target_[m] = waveforms::rest_angle(config_.device, m);
    }
  }

  const double max_move = crank.omega_max_rad_s * dt;
  const std::vector<double> last_safe = alpha_;
  for (std::size_t m = 0; m < alpha_.size(); ++m) {
    alpha_[m] += std::clamp(target_[m] - alpha_[m], -max_move, max_move);
  }

  if (state_ == State::Running) {
    // midpoint rule over the step just taken
    transported_m3_ +=
        transport::instantaneous_flow(config_.limb, regime_, run_t - 0.5 * dt) * dt;
  }
  if (state_ == State::DonningStep2 && settled()) state_ = State::Ready;

  if (state_ != State::Faulted) {
    const auto frame = make_frame();
    for (std::size_t a = 0; a < frame.actuators.size(); ++a) {
      if (frame.actuators[a].pressure_pa > config_.safety.pressure_cap_pa) {
        estop("safety: actuator " + std::to_string(a + 1) + " at " +
              fmt_number(frame.actuators[a].pressure_pa) + " Pa exceeds the pressure cap");
        // report the offending state once, then back off to the last
        // in-limit position and hold there
        auto report = make_frame();
        alpha_ = last_safe;
        target_ = last_safe;
        return report;
      }
    }
  }
  if (step_ % sim.telemetry_decimation() == 0) return make_frame();
  return std::nullopt;
}

TelemetryFrame Session::snapshot() const { return make_frame(); }

std::vector<TelemetryFrame> Session::run_until_quiescent(std::size_t max_steps) {
  std::vector<TelemetryFrame> frames;
  for (std::size_t i = 0; i < max_steps && !quiescent(); ++i) {
    if (auto f = tick()) frames.push_back(std::move(*f));
  }
  return frames;
}

TelemetryFrame Session::make_frame() const {
  const auto& dev = config_.device;
  const auto& limb = config_.limb;
  TelemetryFrame f;
  f.t_s = time_s();
  f.state = state_;
  f.fault = fault_;
  f.cumulative_volume_m3 = transported_m3_;

  std::vector<drivetrain::ChamberVolumes> chambers;
  chambers.reserve(alpha_.size());
  for (double a : alpha_) chambers.push_back(drivetrain::chamber_volumes(dev.crank, a));
  const auto volumes = drivetrain::route_volumes(dev.manifold, chambers);

  const double vmax = dev.actuator.max_fluid_volume_m3;
  f.actuators.reserve(volumes.size());
  for (double v : volumes) {
    const double vc = std::clamp(v, 0.0, vmax);
    f.actuators.push_back({limb.rest_radius_m - limb.compliance_m_per_m3 * (vmax - vc),
                           actuator::pressure_from_volume(dev.actuator, v), vc});
  }

  // quiescent hydraulic force on the piston, with the actuator contact
  // pressure standing in for line pressure; a vented chamber contributes zero
  const auto& map = dev.manifold.port_map();
  const auto port_pressure = [&](std::size_t motor, drivetrain::Chamber c) {
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (map[i].motor == motor && map[i].chamber == c) return f.actuators[i].pressure_pa;
    }
    return 0.0;
  };
  f.motors.reserve(alpha_.size());
  for (std::size_t m = 0; m < alpha_.size(); ++m) {
    const double force = (port_pressure(m, drivetrain::Chamber::A) -
                          port_pressure(m, drivetrain::Chamber::B)) *
                         dev.crank.bore_area_m2;
    f.motors.push_back({alpha_[m], drivetrain::piston_position(dev.crank, alpha_[m]),
                        drivetrain::crank_torque(dev.crank, alpha_[m], force),
                        chambers[m].a_m3, chambers[m].b_m3});
  }
  return f;
}

CsvRecorder::CsvRecorder(std::ostream& out, std::size_t num_actuators, std::size_t num_motors)
    : out_(out) {
  out_ << "t_s,state";
  for (const char* col : {"r", "p", "v"}) {
    const char* unit = col[0] == 'r' ? "_m" : col[0] == 'p' ? "_pa" : "_m3";
    for (std::size_t i = 1; i <= num_actuators; ++i) out_ << ',' << col << i << unit;
  }
  for (const char* col : {"alpha", "x", "tau", "va", "vb"}) {
    const std::string c = col;
    const char* unit = c == "alpha" ? "_rad" : c == "x" ? "_m" : c == "tau" ? "_nm" : "_m3";
    for (std::size_t i = 1; i <= num_motors; ++i) out_ << ',' << col << i << unit;
  }
  out_ << ",qcum_m3\n";
}

void CsvRecorder::write(const TelemetryFrame& f) {
  out_ << fmt_number(f.t_s) << ',' << to_string(f.state);
  for (const auto& a : f.actuators) out_ << ',' << fmt_number(a.radius_m);
  for (const auto& a : f.actuators) out_ << ',' << fmt_number(a.pressure_pa);
  for (const auto& a : f.actuators) out_ << ',' << fmt_number(a.volume_m3);
  for (const auto& m : f.motors) out_ << ',' << fmt_number(m.alpha_rad);
  for (const auto& m : f.motors) out_ << ',' << fmt_number(m.piston_m);
  for (const auto& m : f.motors) out_ << ',' << fmt_number(m.torque_nm);
  for (const auto& m : f.motors) out_ << ',' << fmt_number(m.chamber_a_m3);
  for (const auto& m : f.motors) out_ << ',' << fmt_number(m.chamber_b_m3);
  out_ << ',' << fmt_number(f.cumulative_volume_m3) << '\n';
}

}  // namespace peristalsim::session
