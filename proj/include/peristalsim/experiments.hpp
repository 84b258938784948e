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

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "peristalsim/config.hpp"
#include "peristalsim/optimizer.hpp"

namespace peristalsim::experiments {

/// Fixed-precision number formatting shared by every CSV writer.
std::string csv_number(double v);

struct PVRow {
  double stroke_percent;
  double alpha_deg;
  double volume_m3;
  double pressure_pa;
};

/// Actuator 1 volume and pressure as the crank withdraws fluid from rest,
/// for operation strokes of 10 % to 100 %.
std::vector<PVRow> pv_sweep(const DeviceConfig& config, std::size_t points_per_stroke = 11);
void write_pv_csv(std::ostream& out, const std::vector<PVRow>& rows);

struct FreqRow {
  double commanded_hz;
  double achieved_hz;
  double stroke_percent;
};

/// Commanded versus achieved frequency between 0.2 and 50 Hz.
std::vector<FreqRow> freq_sweep(const DeviceConfig& config);
void write_freq_csv(std::ostream& out, const std::vector<FreqRow>& rows);

struct TransportGrid {
  std::vector<double> onset_delay_s;
  std::vector<double> frequency_hz;
  std::vector<double> glycerin_mass_fraction;
};

/// Onset delays 0 to 1125 ms at 0.2 and 0.5 Hz in pure glycerin.
TransportGrid default_transport_grid();

struct TransportRow {
  double onset_delay_s = 0.0;
  double frequency_hz = 0.0;
  double glycerin_mass_fraction = 0.0;
  double wavelength_m = 0.0;
  double viscosity_cp = 0.0;
  double mean_flow_m3_s = 0.0;
  double reynolds = 0.0;
  /// "ok", "frequency_clamped", or "infeasible: <reason>".
  std::string status;
};

/// One full-amplitude peristaltic run per grid point, evaluated through the
/// composed schedule. Infeasible points are flagged, never fatal.
std::vector<TransportRow> transport_sweep(const DeviceConfig& config, const TransportGrid& grid);
void write_transport_csv(std::ostream& out, const std::vector<TransportRow>& rows);

optimizer::RegimeResult run_optimizer(const DeviceConfig& config,
                                      const optimizer::RegimeConstraints& constraints);
void write_optimizer_grid_csv(std::ostream& out, const optimizer::RegimeResult& result);
nlohmann::json optimizer_summary(const DeviceConfig& config,
                                 const optimizer::RegimeConstraints& constraints,
                                 const optimizer::RegimeResult& result);

/// Constraints from a document such as
/// {"frequency_hz":{"min":0.1,"max":2}, "onset_delay_s":[0,0.125],
///  "amplitude_fraction":[1], "lambda_max_m":0.22, "pressure_cap_pa":22000}.
/// Missing keys keep the defaults tied to the device config.
optimizer::RegimeConstraints constraints_from_json(const DeviceConfig& config,
                                                   const nlohmann::json& doc);
optimizer::RegimeConstraints default_constraints(const DeviceConfig& config);

}  // namespace peristalsim::experiments
