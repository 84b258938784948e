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
#include <span>
#include <vector>

namespace peristalsim::drivetrain {

inline constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

/// Servo-driven offset slider-crank feeding a double-acting hydraulic
/// cylinder. Angles in radians.
struct CrankSpec {
  double crank_length_m = 0.02;
  double rod_length_m = 0.02;
  double alpha_min_rad = 30.0 * kDegToRad;
  double alpha_max_rad = 120.0 * kDegToRad;
  double bore_area_m2 = 2.0143972338352475e-4;
  double torque_max_nm = 7.0;
  // pi^2 rad/s puts the 10 % stroke plateau at 20 Hz
  double omega_max_rad_s = 9.869604401089358;

  double alpha_mid_rad() const { return 0.5 * (alpha_min_rad + alpha_max_rad); }
  double half_range_rad() const { return 0.5 * (alpha_max_rad - alpha_min_rad); }

  void validate() const;
};

enum class Chamber { A, B };

struct PortAssignment {
  std::size_t motor;  // zero-based
  Chamber chamber;
};

/**
 * Routing of hydraulic ports to actuators.
 *
 * With two motors the eight actuators share the four cylinder ports in pairs.
 * With eight motors each actuator hangs off chamber A of its own cylinder and
 * chamber B vents to the reservoir.
 */
class Manifold {
 public:
  Manifold() = default;
  Manifold(std::size_t num_motors, std::vector<PortAssignment> port_map);

  std::size_t num_motors() const { return num_motors_; }
  std::size_t num_actuators() const { return port_map_.size(); }
  const std::vector<PortAssignment>& port_map() const { return port_map_; }
  /// Number of actuators hanging off (motor, chamber).
  std::size_t port_load(std::size_t motor, Chamber chamber) const;

 private:
  std::size_t num_motors_ = 0;
  std::vector<PortAssignment> port_map_;
};

/// {1,5} on motor 1 A, {3,7} on motor 1 B, {2,6} on motor 2 A, {4,8} on motor 2 B.
Manifold default_two_piston_manifold();
Manifold eight_piston_manifold();

/// Chamber volumes pushed out towards the actuators for one cylinder.
struct ChamberVolumes {
  double a_m3;
  double b_m3;
};

/// Piston position along the stroke path for crank angle alpha.
double piston_position(const CrankSpec& spec, double alpha_rad);

/// Motor torque needed to hold rod force f_t at crank angle alpha.
double crank_torque(const CrankSpec& spec, double alpha_rad, double rod_force_n);

/// Fluid volume pushed out of chamber A relative to the alpha_min reference.
/// Zero at alpha_min, the full stroke volume at alpha_max.
double displaced_volume(const CrankSpec& spec, double alpha_rad);

double stroke_volume(const CrankSpec& spec);

/// Both chambers; a_m3 + b_m3 == stroke_volume for every alpha.
ChamberVolumes chamber_volumes(const CrankSpec& spec, double alpha_rad);

/// Highest sinusoid frequency the servo can follow at this stroke fraction.
double max_frequency(const CrankSpec& spec, double stroke_fraction);

/// Commanded frequency limited to what the servo can follow.
double achieved_frequency(const CrankSpec& spec, double commanded_hz,
                          double stroke_fraction);

/// Per-actuator fluid volume from per-motor chamber volumes. Each port's
/// volume splits equally between the actuators attached to it.
std::vector<double> route_volumes(const Manifold& manifold,
                                  std::span<const ChamberVolumes> motor_volumes);

/// Crank angle that puts the given chamber at full delivery.
double alpha_filling(const CrankSpec& spec, Chamber chamber);

}  // namespace peristalsim::drivetrain
