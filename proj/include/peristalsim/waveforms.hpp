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
#include <limits>
#include <string_view>
#include <vector>

#include "peristalsim/device.hpp"

namespace peristalsim::waveforms {

// Sign convention: a positive onset delay makes each channel lag its
// predecessor by onset_delay_s, so the wave travels from start_actuator
// towards higher indices (distal to proximal). Sampling spatial_wave at
// x_n = (n - 1) * pitch with wavelength pitch / (f * dt) reproduces the same
// lags, which is the convention both functions below share.

enum class Direction { DistalToProximal, ProximalToDistal };
enum class PatternKind { Peristaltic, AllInPhase, SequentialSqueeze };
enum class SqueezeProfile { HalfSine, Trapezoid };

std::string_view to_string(Direction d);
std::string_view to_string(PatternKind k);
std::string_view to_string(SqueezeProfile p);
Direction direction_from_string(std::string_view s);
PatternKind kind_from_string(std::string_view s);
SqueezeProfile squeeze_profile_from_string(std::string_view s);

/// Sinusoidal drive for a bank of channels (motors).
struct WaveCommand {
  double amplitude_rad = 0.0;
  double frequency_hz = 0.2;
  double onset_delay_s = 0.0;
  std::size_t num_actuators = 8;
  std::size_t start_actuator = 1;  // one-based
  Direction direction = Direction::DistalToProximal;
  double duration_s = 10.0;

  /// Checks the command against the crank's operating range.
  void validate(const drivetrain::CrankSpec& crank) const;
};

struct SpatialWaveParams {
  double amplitude_m = 0.0;
  double wavelength_m = std::numeric_limits<double>::infinity();
  double frequency_hz = 0.2;
  double pitch_m = 1.1e-2;
  double phase_delay_s = 0.0;
};

/// Crank angle of channel n (one-based) at time t: mid-range plus the
/// delayed sinusoid.
double motor_angle(const WaveCommand& cmd, const drivetrain::CrankSpec& crank,
                   std::size_t n, double t_s);

/// Signed delay multiple of channel n relative to the start channel.
double channel_delay_index(const WaveCommand& cmd, std::size_t n);

/// Radial wall displacement of the travelling compression wave.
double spatial_wave(const SpatialWaveParams& params, double x_m, double t_s);

/// Wavelength implied by channel pitch and onset delay; infinite at dt = 0.
double wavelength_from_delay(double pitch_m, double frequency_hz, double delay_s);

/// Limb surface displacement amplitude for a fluid volume swing.
double radial_amplitude(double compliance_m_per_m3, double volume_swing_m3);

struct PatternOptions {
  double sample_period_s = 0.01;
  double squeeze_time_s = 1.0;
  SqueezeProfile squeeze_profile = SqueezeProfile::HalfSine;
};

/**
 * Sampled drive for one pattern run.
 *
 * `motor_angle_rad[m][i]` is the target angle of motor m at t = i *
 * sample_period_s and `actuator_volume_m3[a][i]` the routed fluid volume of
 * actuator a. The schedule is fully validated on construction, so every
 * stored sample lies inside the crank and actuator bounds.
 */
struct PatternSchedule {
  PatternKind kind = PatternKind::Peristaltic;
  WaveCommand command;
  PatternOptions options;
  double commanded_frequency_hz = 0.0;
  double frequency_hz = 0.0;  // after the servo speed clamp
  double stroke_fraction = 0.0;
  /// Time lag of each actuator behind actuator 1, wrapped into one period.
  /// Empty for sequential squeeze.
  std::vector<double> actuator_lag_s;
  std::vector<std::vector<double>> motor_angle_rad;
  std::vector<std::vector<double>> actuator_volume_m3;
  /// Half the peak-to-peak routed volume swing of one actuator.
  double volume_amplitude_m3 = 0.0;

  double sample_period_s() const { return options.sample_period_s; }
  std::size_t num_samples() const {
    return motor_angle_rad.empty() ? 0 : motor_angle_rad.front().size();
  }
  double duration_s() const { return command.duration_s; }
};

/// Lag of each actuator behind actuator 1 for a sinusoidal drive, wrapped
/// into [0, 1/f). Chamber B ports run half a period out of phase.
std::vector<double> actuator_lags(const WaveCommand& cmd,
                                  const drivetrain::Manifold& manifold, double frequency_hz);

/// Per-actuator volume swing (half peak-to-peak) of a sinusoid of the given
/// crank amplitude about mid-range.
double sinusoid_volume_amplitude(const DeviceSpecs& specs, double amplitude_rad);

/// Rest angle used by sequential squeezing and by idle release.
double rest_angle(const DeviceSpecs& specs, std::size_t motor);

/// Samples the pattern. Throws ValidationError if any sample leaves the
/// actuator volume bounds or the crank range.
PatternSchedule compose_pattern(PatternKind kind, const WaveCommand& cmd,
                                const DeviceSpecs& specs,
                                const PatternOptions& options = {});

/// Index (one-based) of the actuator squeezing at time t, or 0 when the
/// squeeze window falls outside the bank.
std::size_t squeezing_actuator(const WaveCommand& cmd, double squeeze_time_s, double t_s);

}  // namespace peristalsim::waveforms
