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
#include <span>
#include <vector>

#include "peristalsim/waveforms.hpp"

namespace peristalsim::transport {

/// Occlusion amplitude that puts the 22 cm / 0.2 Hz regime at 1 mL/min in a
/// 3 mm vein. Recomputed by calibrate_occlusion() in the test suite.
inline constexpr double kCalibratedOcclusion_m = 1.740735131331304e-4;

/// Velocity-diameter product behind the tabulated glycerin Reynolds numbers.
inline constexpr double kTableVelocityDiameter_m2_s = 3.18e-6;

struct LimbModel {
  double vein_mean_radius_m = 3e-3;
  double occlusion_amplitude_m = kCalibratedOcclusion_m;
  double actuator_pitch_m = 1.1e-2;
  double actuation_length_m = 9.2e-2;
  double lambda_crit_m = 0.22;
  /// Limb radius under a relaxed actuator.
  double rest_radius_m = 31.85e-3;
  /// Surface displacement per unit of actuator fluid volume; the default maps
  /// a full-stroke swing of 2.5 mL onto the calibrated occlusion.
  double compliance_m_per_m3 = kCalibratedOcclusion_m / 2.5e-6;

  void validate() const;
};

/// Glycerin-water mixture at a temperature. Build with make_fluid().
struct FluidSpec {
  double glycerin_mass_fraction = 1.0;
  double temperature_c = 22.0;
  double density_kg_m3 = 0.0;
  double viscosity_pa_s = 0.0;
};

FluidSpec make_fluid(double glycerin_mass_fraction, double temperature_c = 22.0);

/// Glycerin-water viscosity from the exponent-blend correlation of Cheng
/// (2008). Valid for 0 <= Cm <= 1 and 0 <= T <= 100 degC.
double cheng_viscosity(double glycerin_mass_fraction, double temperature_c);

/// Ideal mass-weighted mixing of glycerin (1260) and water (998 kg/m^3).
/// Temperature is accepted for range checking only.
double mixture_density(double glycerin_mass_fraction, double temperature_c);

/// Time-averaged flow of a sinusoidal wall wave with zero pressure rise per
/// wavelength, in terms of wave speed.
double mean_flow_from_speed(double a_m, double b_m, double c_m_s);

/// Same as mean_flow_from_speed with c = wavelength * frequency.
double mean_flow_from_wavelength(double a_m, double b_m, double wavelength_m,
                                 double frequency_hz);

struct OracleOptions {
  std::size_t initial_stations = 2048;
  std::size_t max_stations = std::size_t{1} << 22;
  /// Relative change between successive refinements that counts as converged.
  double quadrature_tolerance = 1e-9;
  /// Relative tolerance on the zero-pressure-rise root.
  double root_tolerance = 1e-10;
};

struct OracleReport {
  double mean_flow_m3_s;
  double wave_frame_flow_m3_s;
  std::size_t stations;
  std::size_t root_iterations;
};

/**
 * Lubrication-theory flow computed from first principles, kept independent
 * of the closed form above.
 *
 * In the wave frame the wall is steady and the axial pressure gradient
 * follows from Poiseuille flow through the local radius. The wave-frame flow
 * is the root of the pressure rise over one wavelength, found by bracketed
 * root search with each pressure rise integrated by composite Simpson.
 * Throws NumericError if the quadrature does not settle.
 */
OracleReport lubrication_oracle_report(double a_m, double b_m, double wavelength_m,
                                       double frequency_hz, double viscosity_pa_s,
                                       const OracleOptions& options = {});

double lubrication_oracle(double a_m, double b_m, double wavelength_m,
                          double frequency_hz, double viscosity_pa_s,
                          const OracleOptions& options = {});

/// Re = rho * v * 2a / mu with v the mean velocity q / (pi a^2).
double reynolds_report(const FluidSpec& fluid, double mean_flow_m3_s, double a_m);

/// Reynolds number at the velocity scale of the glycerin property table.
double table_reynolds(const FluidSpec& fluid);

/// Occlusion amplitude b in (0, a) giving the target mean flow.
double calibrate_occlusion(double a_m, double wavelength_m, double frequency_hz,
                           double target_flow_m3_s);

/// Travelling-wave parameters a pattern presents to the vein.
struct Regime {
  double frequency_hz = 0.0;
  double wavelength_m = std::numeric_limits<double>::infinity();
  double occlusion_m = 0.0;
  /// +1 when the wave travels towards higher actuator indices.
  double direction = 1.0;
};

/// Builds the regime directly from driving parameters.
Regime make_regime(const LimbModel& limb, double frequency_hz, double onset_delay_s,
                   double volume_amplitude_m3, double direction = 1.0);

/// Regime of a sinusoidal drive from its per-actuator lags. The mean
/// neighbour lag, wrapped into half a period, sets wavelength and direction.
Regime regime_from_lags(const LimbModel& limb, std::span<const double> actuator_lag_s,
                        double frequency_hz, double volume_amplitude_m3);

Regime regime_from_schedule(const LimbModel& limb, const waveforms::PatternSchedule& schedule);

/// Signed mean flow with the long-wavelength boundary correction: beyond
/// lambda_crit the flow at lambda_crit is scaled by lambda_crit / lambda,
/// which falls linearly in 1/lambda to the in-phase value of zero.
double regime_mean_flow(const LimbModel& limb, const Regime& regime);

/// Lab-frame flow through the cross-section under the first actuator.
double instantaneous_flow(const LimbModel& limb, const Regime& regime, double t_s);

struct FlowSample {
  double t_s;
  double flow_m3_s;
};

struct TransportResult {
  Regime regime;
  double mean_flow_m3_s = 0.0;
  double reynolds = 0.0;
  double cumulative_volume_m3 = 0.0;
  std::vector<FlowSample> trace;
};

TransportResult simulate_transport(const LimbModel& limb, const FluidSpec& fluid,
                                   const waveforms::PatternSchedule& schedule);

inline double to_ml_per_min(double m3_s) { return m3_s * 6e7; }

}  // namespace peristalsim::transport
