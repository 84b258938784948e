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

#include "peristalsim/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "peristalsim/errors.hpp"

namespace peristalsim::waveforms {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Rise and fall share of the trapezoid squeeze profile.
constexpr double kTrapezoidRamp = 0.25;

double squeeze_shape(SqueezeProfile profile, double u) {
  if (u < 0.0 || u >= 1.0) return 0.0;
  if (profile == SqueezeProfile::HalfSine) return std::sin(M_PI * u);
  if (u < kTrapezoidRamp) return u / kTrapezoidRamp;
  if (u > 1.0 - kTrapezoidRamp) return (1.0 - u) / kTrapezoidRamp;
  return 1.0;
}

// Peak crank speed of a squeeze of depth D lasting t_s.
double squeeze_peak_speed(SqueezeProfile profile, double depth, double t_s) {
  return profile == SqueezeProfile::HalfSine ? depth * M_PI / t_s
                                             : depth / (kTrapezoidRamp * t_s);
}

std::size_t squeeze_order(const WaveCommand& cmd, std::size_t n) {
  const auto count = cmd.num_actuators;
  const auto s = cmd.start_actuator;
  return cmd.direction == Direction::DistalToProximal ? (n + count - s) % count
                                                      : (s + count - n) % count;
}

double clamp_to_range(const drivetrain::CrankSpec& crank, double alpha) {
  return std::clamp(alpha, crank.alpha_min_rad, crank.alpha_max_rad);
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::DistalToProximal ? "distal_to_proximal" : "proximal_to_distal";
}

std::string_view to_string(PatternKind k) {
  switch (k) {
    case PatternKind::Peristaltic: return "peristaltic";
    case PatternKind::AllInPhase: return "all_in_phase";
    case PatternKind::SequentialSqueeze: return "sequential_squeeze";
  }
  return "?";
}

std::string_view to_string(SqueezeProfile p) {
  return p == SqueezeProfile::HalfSine ? "half_sine" : "trapezoid";
}

Direction direction_from_string(std::string_view s) {
  if (s == "distal_to_proximal") return Direction::DistalToProximal;
  if (s == "proximal_to_distal") return Direction::ProximalToDistal;
  throw ValidationError("unknown direction '" + std::string(s) + "'");
}

PatternKind kind_from_string(std::string_view s) {
  if (s == "peristaltic") return PatternKind::Peristaltic;
  if (s == "all_in_phase") return PatternKind::AllInPhase;
  if (s == "sequential_squeeze") return PatternKind::SequentialSqueeze;
  throw ValidationError("unknown pattern kind '" + std::string(s) + "'");
}

SqueezeProfile squeeze_profile_from_string(std::string_view s) {
  if (s == "half_sine") return SqueezeProfile::HalfSine;
  if (s == "trapezoid") return SqueezeProfile::Trapezoid;
  throw ValidationError("unknown squeeze profile '" + std::string(s) + "'");
}

void WaveCommand::validate(const drivetrain::CrankSpec& crank) const {
  if (!(frequency_hz > 0)) throw ValidationError("frequency must be positive");
  if (!(onset_delay_s >= 0)) throw ValidationError("onset delay must be non-negative");
  if (!(duration_s > 0)) throw ValidationError("duration must be positive");
  if (num_actuators == 0) throw ValidationError("no channels to drive");
  if (start_actuator < 1 || start_actuator > num_actuators) {
    throw ValidationError("start actuator " + std::to_string(start_actuator) +
                          " outside 1.." + std::to_string(num_actuators));
  }
  if (!(amplitude_rad >= 0) || amplitude_rad > crank.half_range_rad() * (1 + 1e-12)) {
    throw ValidationError("amplitude leaves the crank operating range");
  }
}

double channel_delay_index(const WaveCommand& cmd, std::size_t n) {
  const double k = static_cast<double>(n) - static_cast<double>(cmd.start_actuator);
  return cmd.direction == Direction::DistalToProximal ? k : -k;
}

double motor_angle(const WaveCommand& cmd, const drivetrain::CrankSpec& crank,
                   std::size_t n, double t_s) {
  if (n < 1 || n > cmd.num_actuators) {
    throw DomainError("channel index " + std::to_string(n) + " out of range");
  }
  if (!(t_s >= 0)) throw DomainError("time must be non-negative");
  const double lag = channel_delay_index(cmd, n) * cmd.onset_delay_s;
  const double phase = kTwoPi * cmd.frequency_hz * (t_s - lag);
  return clamp_to_range(crank, crank.alpha_mid_rad() + cmd.amplitude_rad * std::sin(phase));
}

double spatial_wave(const SpatialWaveParams& params, double x_m, double t_s) {
  const double k = std::isinf(params.wavelength_m) ? 0.0 : kTwoPi / params.wavelength_m;
  return params.amplitude_m *
         std::cos(k * x_m - kTwoPi * params.frequency_hz * (t_s - params.phase_delay_s));
}

double wavelength_from_delay(double pitch_m, double frequency_hz, double delay_s) {
  if (!(pitch_m > 0 && frequency_hz > 0 && delay_s >= 0)) {
    throw DomainError("wavelength_from_delay needs p > 0, f > 0, dt >= 0");
  }
  if (delay_s == 0.0) return std::numeric_limits<double>::infinity();
  return pitch_m / (frequency_hz * delay_s);
}

double radial_amplitude(double compliance_m_per_m3, double volume_swing_m3) {
  if (!(compliance_m_per_m3 >= 0 && volume_swing_m3 >= 0)) {
    throw DomainError("radial_amplitude needs non-negative inputs");
  }
  return compliance_m_per_m3 * volume_swing_m3;
}

double rest_angle(const DeviceSpecs& specs, std::size_t motor) {
  const auto& m = specs.manifold;
  const bool a = m.port_load(motor, drivetrain::Chamber::A) > 0;
  const bool b = m.port_load(motor, drivetrain::Chamber::B) > 0;
  if (a && b) return specs.crank.alpha_mid_rad();
  return drivetrain::alpha_filling(specs.crank, b ? drivetrain::Chamber::B
                                                  : drivetrain::Chamber::A);
}

std::size_t squeezing_actuator(const WaveCommand& cmd, double squeeze_time_s, double t_s) {
  const double cycle = squeeze_time_s * static_cast<double>(cmd.num_actuators);
  const double in_cycle = std::fmod(t_s, cycle);
  const auto slot = static_cast<std::size_t>(std::floor(in_cycle / squeeze_time_s));
  if (slot >= cmd.num_actuators) return 0;
  for (std::size_t n = 1; n <= cmd.num_actuators; ++n) {
    if (squeeze_order(cmd, n) == slot) return n;
  }
  return 0;
}

std::vector<double> actuator_lags(const WaveCommand& cmd,
                                  const drivetrain::Manifold& manifold, double frequency_hz) {
  const double period = 1.0 / frequency_hz;
  std::vector<double> lags;
  lags.reserve(manifold.num_actuators());
  for (const auto& port : manifold.port_map()) {
    double lag = channel_delay_index(cmd, port.motor + 1) * cmd.onset_delay_s;
    if (port.chamber == drivetrain::Chamber::B) lag += 0.5 * period;
    lags.push_back(lag);
  }
  const double ref = lags.front();
  for (double& l : lags) {
    l = std::fmod(l - ref, period);
    if (l < 0) l += period;
  }
  return lags;
}

double sinusoid_volume_amplitude(const DeviceSpecs& specs, double amplitude_rad) {
  const auto& crank = specs.crank;
  const double mid = crank.alpha_mid_rad();
  const auto& p0 = specs.manifold.port_map().front();
  const double load = static_cast<double>(specs.manifold.port_load(p0.motor, p0.chamber));
  return 0.5 *
         (drivetrain::displaced_volume(crank, mid + amplitude_rad) -
          drivetrain::displaced_volume(crank, mid - amplitude_rad)) /
         load;
}

PatternSchedule compose_pattern(PatternKind kind, const WaveCommand& cmd_in,
                                const DeviceSpecs& specs, const PatternOptions& options) {
  const auto& crank = specs.crank;
  const auto& manifold = specs.manifold;
  const std::size_t channels = manifold.num_motors();

  WaveCommand cmd = cmd_in;
  if (cmd.num_actuators != channels) {
    throw ValidationError("pattern drives " + std::to_string(cmd.num_actuators) +
                          " channels but the manifold has " + std::to_string(channels) +
                          " motors");
  }
  if (kind == PatternKind::AllInPhase) cmd.onset_delay_s = 0.0;
  cmd.validate(crank);
  if (!(options.sample_period_s > 0)) {
    throw ValidationError("sample period must be positive");
  }

  PatternSchedule out;
  out.kind = kind;
  out.options = options;
  out.commanded_frequency_hz = cmd.frequency_hz;
  out.stroke_fraction = cmd.amplitude_rad / crank.half_range_rad();

  // rounding guards against 60 / 0.01 landing on 5999.999...
  const auto n_samples =
      static_cast<std::size_t>(std::llround(cmd.duration_s / options.sample_period_s));
  if (n_samples == 0) throw ValidationError("duration shorter than one sample");

  out.motor_angle_rad.assign(channels, std::vector<double>(n_samples));

  if (kind == PatternKind::SequentialSqueeze) {
    const double ts = options.squeeze_time_s;
    if (!(ts > 0)) throw ValidationError("squeeze time must be positive");
    const double depth = 2.0 * cmd.amplitude_rad;
    if (squeeze_peak_speed(options.squeeze_profile, depth, ts) >
        crank.omega_max_rad_s * (1 + 1e-12)) {
      throw ValidationError("squeeze of " + std::to_string(ts) +
                            " s exceeds the servo speed limit");
    }
    out.frequency_hz = 1.0 / (ts * static_cast<double>(channels));
    double worst_swing = 0.0;
    for (std::size_t m = 0; m < channels; ++m) {
      const double rest = rest_angle(specs, m);
      if (rest - depth < crank.alpha_min_rad - 1e-12) {
        throw ValidationError("squeeze depth drives motor " + std::to_string(m + 1) +
                              " below the crank range");
      }
      const double cycle = ts * static_cast<double>(channels);
      const double start = static_cast<double>(squeeze_order(cmd, m + 1)) * ts;
      for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) * options.sample_period_s;
        const double u = (std::fmod(t, cycle) - start) / ts;
        out.motor_angle_rad[m][i] =
            clamp_to_range(crank, rest - depth * squeeze_shape(options.squeeze_profile, u));
      }
      const double swing = 0.5 * (drivetrain::displaced_volume(crank, rest) -
                                  drivetrain::displaced_volume(crank, rest - depth));
      worst_swing = std::max(worst_swing, std::abs(swing));
    }
    const auto& p0 = manifold.port_map().front();
    out.volume_amplitude_m3 =
        worst_swing / static_cast<double>(manifold.port_load(p0.motor, p0.chamber));
  } else {
    out.frequency_hz = cmd.amplitude_rad > 0
                           ? drivetrain::achieved_frequency(crank, cmd.frequency_hz,
                                                            out.stroke_fraction)
                           : cmd.frequency_hz;
    WaveCommand effective = cmd;
    effective.frequency_hz = out.frequency_hz;
    for (std::size_t m = 0; m < channels; ++m) {
      for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) * options.sample_period_s;
        out.motor_angle_rad[m][i] = motor_angle(effective, crank, m + 1, t);
      }
    }
    out.volume_amplitude_m3 = sinusoid_volume_amplitude(specs, cmd.amplitude_rad);
    out.actuator_lag_s = actuator_lags(cmd, manifold, out.frequency_hz);
  }

  // route every sample and check it against the actuator's fluid bounds
  out.command = cmd;
  const double vmax = specs.actuator.max_fluid_volume_m3;
  out.actuator_volume_m3.assign(manifold.num_actuators(), std::vector<double>(n_samples));
  std::vector<drivetrain::ChamberVolumes> chambers(channels);
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (std::size_t m = 0; m < channels; ++m) {
      chambers[m] = drivetrain::chamber_volumes(crank, out.motor_angle_rad[m][i]);
    }
    const auto vols = drivetrain::route_volumes(manifold, chambers);
    for (std::size_t a = 0; a < vols.size(); ++a) {
      if (vols[a] < -1e-9 * vmax || vols[a] > vmax * (1 + 1e-9)) {
        throw ValidationError(
            "actuator " + std::to_string(a + 1) + " volume " + std::to_string(vols[a] * 1e6) +
            " mL at t = " + std::to_string(static_cast<double>(i) * options.sample_period_s) +
            " s outside [0, " + std::to_string(vmax * 1e6) + "] mL");
      }
      out.actuator_volume_m3[a][i] = std::clamp(vols[a], 0.0, vmax);
    }
  }
  return out;
}

}  // namespace peristalsim::waveforms
