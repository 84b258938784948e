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

#include <vector>

namespace peristalsim::actuator {

struct PVPoint {
  double volume_m3;
  double pressure_pa;
};

/**
 * Quasi-static pressure-volume law of one fluidic fabric actuator.
 *
 * Knots are ordered by strictly increasing fluid volume. Pressure never
 * increases with volume: withdrawing fluid tightens the actuator around the
 * limb, so the largest pressure sits at zero volume and the smallest at the
 * actuator's maximum fluid volume.
 */
class PVCurve {
 public:
  PVCurve() = default;
  explicit PVCurve(std::vector<PVPoint> points);

  const std::vector<PVPoint>& points() const { return points_; }
  double max_pressure() const { return points_.front().pressure_pa; }
  double min_pressure() const { return points_.back().pressure_pa; }
  double max_volume() const { return points_.back().volume_m3; }

 private:
  std::vector<PVPoint> points_;
};

/// Knots at 0, 4 and 5 mL, peaking at 22 kPa.
PVCurve default_pv_curve();

struct ActuatorSpec {
  double tube_outer_diameter_m = 4.8e-3;
  double tube_inner_diameter_m = 3.2e-3;
  double stitch_length_m = 0.177;
  double wrinkle_ratio = 2.5;
  double width_m = 15e-3;
  double thickness_m = 1.5e-3;
  double max_fluid_volume_m3 = 5e-6;
  PVCurve pv_curve = default_pv_curve();

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
};

struct FixtureSpec {
  double cylinder_diameter_m = 63.7e-3;
  double sensor_arc_rad = 68.9 * 3.14159265358979323846 / 180.0;
  double actuator_width_m = 15e-3;

  void validate() const;
};

/// Piecewise-linear lookup on the calibration curve. Throws DomainError when
/// the volume lies outside [0, max_fluid_volume].
double pressure_from_volume(const ActuatorSpec& spec, double volume_m3);

/// Inverse lookup; on a flat segment the smallest matching volume wins.
double volume_from_pressure(const ActuatorSpec& spec, double pressure_pa);

/// Contact pressure on the instrumented arc of the test cylinder.
double pressure_from_sensor_force(const FixtureSpec& fixture, double force_n);

/// Hoop stress in the actuator wall needed to hold a skin pressure on a
/// limb of the given radius.
double tension_from_pressure(const ActuatorSpec& spec, double pressure_pa,
                             double limb_radius_m);

/// Skin pressure carried by a wall stress; inverse of tension_from_pressure.
double pressure_from_tension(const ActuatorSpec& spec, double stress_pa,
                             double limb_radius_m);

}  // namespace peristalsim::actuator
