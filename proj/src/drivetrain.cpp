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

#include "peristalsim/drivetrain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "peristalsim/errors.hpp"

namespace peristalsim::drivetrain {

namespace {

// Angles within this distance of the operating limits are treated as on them.
constexpr double kAngleSlack = 1e-12;

double checked_angle(const CrankSpec& spec, double alpha) {
  if (!(alpha >= spec.alpha_min_rad - kAngleSlack &&
        alpha <= spec.alpha_max_rad + kAngleSlack)) {
    throw DomainError("crank angle " + std::to_string(alpha / kDegToRad) +
                      " deg outside operating range");
  }
  return std::clamp(alpha, spec.alpha_min_rad, spec.alpha_max_rad);
}

}  // namespace

void CrankSpec::validate() const {
  if (!(crank_length_m > 0 && rod_length_m >= crank_length_m)) {
    throw ConfigError("crank needs rod_length >= crank_length > 0");
  }
  if (!(alpha_min_rad < alpha_max_rad)) {
    throw ConfigError("crank alpha_min must be below alpha_max");
  }
  if (!(bore_area_m2 > 0 && torque_max_nm > 0 && omega_max_rad_s > 0)) {
    throw ConfigError("crank bore area, torque and speed limits must be positive");
  }
  // the offset term of the kinematics must stay real over the range
  for (double a : {alpha_min_rad, alpha_max_rad, alpha_mid_rad()}) {
    const double u = (crank_length_m * std::sin(a) - crank_length_m) / rod_length_m;
    if (u * u > 1.0) throw ConfigError("crank geometry not closable over alpha range");
  }
}

Manifold::Manifold(std::size_t num_motors, std::vector<PortAssignment> port_map)
    : num_motors_(num_motors), port_map_(std::move(port_map)) {
  if (num_motors_ != 2 && num_motors_ != 8) {
    throw ConfigError("manifold supports 2 or 8 motors");
  }
  if (port_map_.empty()) throw ConfigError("manifold port_map is empty");
  for (const auto& p : port_map_) {
    if (p.motor >= num_motors_) {
      throw ConfigError("manifold port_map references missing motor");
    }
  }
  if (num_motors_ == 2) {
    for (std::size_t m = 0; m < 2; ++m) {
      for (Chamber c : {Chamber::A, Chamber::B}) {
        if (port_load(m, c) != port_map_.size() / 4 || port_map_.size() % 4 != 0) {
          throw ConfigError("two-piston manifold needs an equal actuator count on every port");
        }
      }
    }
  } else {
    if (port_map_.size() != num_motors_) {
      throw ConfigError("eight-piston manifold routes one actuator per motor");
    }
    for (std::size_t m = 0; m < num_motors_; ++m) {
      if (port_load(m, Chamber::A) != 1 || port_load(m, Chamber::B) != 0) {
        throw ConfigError("eight-piston manifold needs one actuator on each chamber A");
      }
    }
  }
}

std::size_t Manifold::port_load(std::size_t motor, Chamber chamber) const {
  std::size_t n = 0;
  for (const auto& p : port_map_) {
    if (p.motor == motor && p.chamber == chamber) ++n;
  }
  return n;
}

Manifold default_two_piston_manifold() {
  using enum Chamber;
  // actuators 1..8
  return Manifold(2, {{0, A}, {1, A}, {0, B}, {1, B}, {0, A}, {1, A}, {0, B}, {1, B}});
}

Manifold eight_piston_manifold() {
  std::vector<PortAssignment> map;
  for (std::size_t m = 0; m < 8; ++m) map.push_back({m, Chamber::A});
  return Manifold(8, std::move(map));
}

double piston_position(const CrankSpec& spec, double alpha_rad) {
  const double a = checked_angle(spec, alpha_rad);
  const double r = spec.crank_length_m;
  const double l = spec.rod_length_m;
  const double offset = (r * std::sin(a) - r) / l;
  return r * std::cos(a) + l * std::sqrt(1.0 - offset * offset);
}

double crank_torque(const CrankSpec& spec, double alpha_rad, double rod_force_n) {
  const double a = checked_angle(spec, alpha_rad);
  return spec.crank_length_m * rod_force_n * std::sin(a);
}

double displaced_volume(const CrankSpec& spec, double alpha_rad) {
  return spec.bore_area_m2 *
         (piston_position(spec, spec.alpha_min_rad) - piston_position(spec, alpha_rad));
}

double stroke_volume(const CrankSpec& spec) {
  return displaced_volume(spec, spec.alpha_max_rad);
}

ChamberVolumes chamber_volumes(const CrankSpec& spec, double alpha_rad) {
  const double a = displaced_volume(spec, alpha_rad);
  return {a, stroke_volume(spec) - a};
}

double max_frequency(const CrankSpec& spec, double stroke_fraction) {
  if (!(stroke_fraction > 0.0 && stroke_fraction <= 1.0)) {
    throw DomainError("stroke fraction must lie in (0, 1]");
  }
  const double angular_amplitude = stroke_fraction * spec.half_range_rad();
  return spec.omega_max_rad_s / (2.0 * M_PI * angular_amplitude);
}

double achieved_frequency(const CrankSpec& spec, double commanded_hz,
                          double stroke_fraction) {
  return std::min(commanded_hz, max_frequency(spec, stroke_fraction));
}

std::vector<double> route_volumes(const Manifold& manifold,
                                  std::span<const ChamberVolumes> motor_volumes) {
  if (motor_volumes.size() != manifold.num_motors()) {
    throw ConfigError("route_volumes: expected " + std::to_string(manifold.num_motors()) +
                      " motors, got " + std::to_string(motor_volumes.size()));
  }
  std::vector<double> out;
  out.reserve(manifold.num_actuators());
  for (const auto& p : manifold.port_map()) {
    const auto& mv = motor_volumes[p.motor];
    const double port = p.chamber == Chamber::A ? mv.a_m3 : mv.b_m3;
    out.push_back(port / static_cast<double>(manifold.port_load(p.motor, p.chamber)));
  }
  return out;
}

double alpha_filling(const CrankSpec& spec, Chamber chamber) {
  return chamber == Chamber::A ? spec.alpha_max_rad : spec.alpha_min_rad;
}

}  // namespace peristalsim::drivetrain
