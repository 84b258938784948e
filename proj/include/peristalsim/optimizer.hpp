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
#include <string>
#include <vector>

#include "peristalsim/device.hpp"
#include "peristalsim/transport.hpp"

namespace peristalsim::optimizer {

/// One search axis: an explicit list of values or a continuous interval.
/// Intervals are sampled at `grid_points` evenly spaced values, endpoints
/// included, before refinement.
struct Axis {
  std::vector<double> values;
  bool continuous = false;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t grid_points = 33;

  static Axis list(std::vector<double> v) { return {std::move(v), false, 0, 0, 0}; }
  static Axis interval(double lo, double hi, std::size_t points = 33) {
    return {{}, true, lo, hi, points};
  }
  std::vector<double> grid() const;
  void validate(const char* name) const;
};

/// Onset delays 0 .. 1125 ms in 125 ms steps.
std::vector<double> default_delay_grid();

struct RegimeConstraints {
  Axis frequency_hz = Axis::interval(0.1, 2.0);
  Axis onset_delay_s = Axis::list(default_delay_grid());
  Axis amplitude_fraction = Axis::list({1.0});
  double lambda_max_m = 0.22;
  double pressure_cap_pa = 22e3;
};

struct RegimePoint {
  double frequency_hz;
  double onset_delay_s;
  double amplitude_fraction;
};

struct Evaluation {
  RegimePoint point;
  double wavelength_m;
  double max_frequency_hz;
  double peak_pressure_pa;
  double mean_flow_m3_s;
  bool frequency_ok;
  bool wavelength_ok;
  bool pressure_ok;
  bool feasible() const { return frequency_ok && wavelength_ok && pressure_ok; }
};

struct RegimeResult {
  Evaluation best;
  double reynolds = 0.0;
  std::vector<std::string> active_constraints;
  std::vector<Evaluation> grid;
};

/// Feasibility and predicted flow of one driving regime. The flow comes from
/// the transport model along the same path a composed schedule takes.
Evaluation evaluate_regime(const transport::LimbModel& limb, const DeviceSpecs& specs,
                           const RegimeConstraints& constraints, const RegimePoint& point);

/// True when `a` should replace `b` as the incumbent: more flow, then lower
/// frequency, then longer onset delay, then smaller amplitude.
bool better(const Evaluation& a, const Evaluation& b);

/**
 * Maximises the predicted mean flow over the driving regime.
 *
 * Every grid combination is evaluated and the best feasible point wins
 * under the total order of better(). Continuous axes are then refined by a
 * multi-start search over every grid cell: feasibility edges are bisected
 * and sampled local maxima polished by golden-section search, to 1e-9 s in
 * delay and 1e-4 Hz in frequency. Throws InfeasibleError when no grid point
 * is feasible.
 */
RegimeResult optimize_regime(const transport::LimbModel& limb,
                             const transport::FluidSpec& fluid, const DeviceSpecs& specs,
                             const RegimeConstraints& constraints);

}  // namespace peristalsim::optimizer
