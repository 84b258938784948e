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

#include "peristalsim/actuator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "peristalsim/errors.hpp"

namespace peristalsim::actuator {

namespace {

// Volumes this close to the curve ends are snapped onto them. Routed volumes
// come out of crank kinematics and pick up last-bit rounding.
constexpr double kVolumeSlack = 1e-9;

}  // namespace

PVCurve::PVCurve(std::vector<PVPoint> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw ConfigError("pv_curve needs at least two knots");
  }
  if (points_.front().volume_m3 != 0.0) {
    throw ConfigError("pv_curve must start at zero volume");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i].volume_m3 > points_[i - 1].volume_m3)) {
      throw ConfigError("pv_curve volumes must be strictly increasing");
    }
    if (points_[i].pressure_pa > points_[i - 1].pressure_pa) {
      throw ConfigError("pv_curve pressure must not increase with volume");
    }
  }
  if (points_.back().pressure_pa < 0.0) {
    throw ConfigError("pv_curve pressures must be non-negative");
  }
}

PVCurve default_pv_curve() {
  return PVCurve({{0.0, 22.0e3}, {4.0e-6, 4.0e3}, {5.0e-6, 1.0e3}});
}

void ActuatorSpec::validate() const {
  if (!(tube_outer_diameter_m > 0 && tube_inner_diameter_m > 0 &&
        stitch_length_m > 0 && width_m > 0 && thickness_m > 0)) {
    throw ConfigError("actuator lengths must be positive");
  }
  if (!(tube_inner_diameter_m < tube_outer_diameter_m)) {
    throw ConfigError("actuator tube inner diameter must be below outer");
  }
  if (!(wrinkle_ratio >= 1.0)) {
    throw ConfigError("actuator wrinkle_ratio must be >= 1");
  }
  if (!(max_fluid_volume_m3 > 0)) {
    throw ConfigError("actuator max_fluid_volume must be positive");
  }
  if (pv_curve.points().empty()) {
    throw ConfigError("actuator pv_curve is empty");
  }
  if (std::abs(pv_curve.max_volume() - max_fluid_volume_m3) >
      1e-12 * max_fluid_volume_m3) {
    throw ConfigError("pv_curve must end at max_fluid_volume");
  }
}

void FixtureSpec::validate() const {
  if (!(cylinder_diameter_m > 0)) {
    throw ConfigError("fixture cylinder diameter must be positive");
  }
  if (!(sensor_arc_rad > 0 && sensor_arc_rad < 2 * M_PI)) {
    throw ConfigError("fixture sensor arc must lie in (0, 2*pi)");
  }
  if (!(actuator_width_m > 0)) {
    throw ConfigError("fixture actuator width must be positive");
  }
}

double pressure_from_volume(const ActuatorSpec& spec, double volume_m3) {
  const double vmax = spec.max_fluid_volume_m3;
  if (!(volume_m3 >= -kVolumeSlack * vmax &&
        volume_m3 <= vmax * (1.0 + kVolumeSlack))) {
    throw DomainError("fluid volume " + std::to_string(volume_m3) +
                      " m^3 outside [0, max_fluid_volume]");
  }
  const auto& pts = spec.pv_curve.points();
  const double v = std::clamp(volume_m3, 0.0, pts.back().volume_m3);
  auto hi = std::upper_bound(pts.begin(), pts.end(), v,
                             [](double x, const PVPoint& p) { return x < p.volume_m3; });
  if (hi == pts.end()) return pts.back().pressure_pa;
  auto lo = hi - 1;
  const double s = (v - lo->volume_m3) / (hi->volume_m3 - lo->volume_m3);
  return lo->pressure_pa + s * (hi->pressure_pa - lo->pressure_pa);
}

double volume_from_pressure(const ActuatorSpec& spec, double pressure_pa) {
  const auto& pts = spec.pv_curve.points();
  if (!(pressure_pa <= pts.front().pressure_pa &&
        pressure_pa >= pts.back().pressure_pa)) {
    throw DomainError("pressure " + std::to_string(pressure_pa) +
                      " Pa outside calibrated range");
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[i + 1];
    if (pressure_pa == a.pressure_pa) return a.volume_m3;
    if (pressure_pa > b.pressure_pa) {
      const double s = (a.pressure_pa - pressure_pa) / (a.pressure_pa - b.pressure_pa);
      return a.volume_m3 + s * (b.volume_m3 - a.volume_m3);
    }
  }
  // pressure equals the curve minimum: first knot carrying it
  for (const auto& p : pts) {
    if (p.pressure_pa == pressure_pa) return p.volume_m3;
  }
  return pts.back().volume_m3;
}

double pressure_from_sensor_force(const FixtureSpec& fixture, double force_n) {
  if (!(force_n >= 0)) {
    throw DomainError("sensor force must be non-negative");
  }
  const double radius = fixture.cylinder_diameter_m / 2.0;
  const double contact_area = radius * fixture.sensor_arc_rad * fixture.actuator_width_m;
  return force_n / contact_area;
}

double tension_from_pressure(const ActuatorSpec& spec, double pressure_pa,
                             double limb_radius_m) {
  if (!(pressure_pa >= 0) || !(limb_radius_m > 0) || !(spec.thickness_m > 0)) {
    throw DomainError("tension_from_pressure needs p >= 0, R > 0, t > 0");
  }
  return pressure_pa * limb_radius_m / spec.thickness_m;
}

double pressure_from_tension(const ActuatorSpec& spec, double stress_pa,
                             double limb_radius_m) {
  if (!(stress_pa >= 0) || !(limb_radius_m > 0) || !(spec.thickness_m > 0)) {
    throw DomainError("pressure_from_tension needs sigma >= 0, R > 0, t > 0");
  }
  return spec.thickness_m * stress_pa / limb_radius_m;
}

}  // namespace peristalsim::actuator
