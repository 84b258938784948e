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

#include <filesystem>
#include <string>

#include "json.hpp"

#include "peristalsim/actuator.hpp"
#include "peristalsim/device.hpp"
#include "peristalsim/transport.hpp"
#include "peristalsim/waveforms.hpp"

namespace peristalsim {

struct SafetyLimits {
  /// Therapy pressures above this are never allowed, whatever the config says.
  static constexpr double kHardCeiling_pa = 30e3;

  double pressure_cap_pa = 22e3;
  double max_frequency_cap_hz = 20.0;

  void validate() const;
};

enum class IdleBehavior { Hold, Release };

struct SimulationSettings {
  double step_s = 1e-3;
  double telemetry_period_s = 1e-2;
  double sample_period_s = 1e-2;
  IdleBehavior idle_behavior = IdleBehavior::Hold;
  waveforms::SqueezeProfile squeeze_profile = waveforms::SqueezeProfile::HalfSine;

  /// Telemetry period as a whole number of steps.
  std::size_t telemetry_decimation() const;
  void validate() const;
};

/// Everything the twin needs to know about one device and its wearer.
struct DeviceConfig {
  DeviceSpecs device;
  actuator::FixtureSpec fixture;
  transport::LimbModel limb;
  double glycerin_mass_fraction = 1.0;
  double temperature_c = 22.0;
  SafetyLimits safety;
  SimulationSettings simulation;

  transport::FluidSpec fluid() const {
    return transport::make_fluid(glycerin_mass_fraction, temperature_c);
  }
  void validate() const;
};

/// Parses a config document. Missing keys keep their defaults; unknown keys
/// and invariant violations throw ConfigError naming the offending path.
DeviceConfig config_from_json(const nlohmann::json& doc);
DeviceConfig load_config(const std::filesystem::path& path);

nlohmann::json config_to_json(const DeviceConfig& config);

}  // namespace peristalsim
