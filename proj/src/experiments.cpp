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

#include "peristalsim/experiments.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdio>
#include <set>

#include "peristalsim/errors.hpp"
#include "peristalsim/waveforms.hpp"

namespace peristalsim::experiments {

namespace {

using drivetrain::Chamber;
using nlohmann::json;

// Crank angle at which chamber A has pushed out `target` cubic metres.
double alpha_for_displacement(const drivetrain::CrankSpec& crank, double target) {
  const double lo = crank.alpha_min_rad;
  const double hi = crank.alpha_max_rad;
  if (target <= 0.0) return lo;
  if (target >= drivetrain::stroke_volume(crank)) return hi;
  const auto fn = [&](double a) { return drivetrain::displaced_volume(crank, a) - target; };
  boost::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      fn, lo, hi, fn(lo), fn(hi), boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (a + b);
}

optimizer::Axis axis_from_json(const json& v, const char* name) {
  if (v.is_array()) {
    std::vector<double> values;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(std::string(name) + " entries must be numbers");
      values.push_back(x.get<double>());
    }
    return optimizer::Axis::list(std::move(values));
  }
  if (v.is_object()) {
    for (const auto& [key, _] : v.items()) {
      if (key != "min" && key != "max" && key != "points") {
        throw ConfigError(std::string(name) + ": unknown field '" + key + "'");
      }
    }
    if (!v.contains("min") || !v.contains("max") || !v.at("min").is_number() ||
        !v.at("max").is_number()) {
      throw ConfigError(std::string(name) + " interval needs numeric min and max");
    }
    std::size_t points = 33;
    if (v.contains("points")) {
      if (!v.at("points").is_number_unsigned()) {
        throw ConfigError(std::string(name) + ".points must be a positive integer");
      }
      points = v.at("points").get<std::size_t>();
    }
    return optimizer::Axis::interval(v.at("min").get<double>(), v.at("max").get<double>(),
                                     points);
  }
  throw ConfigError(std::string(name) + " must be a list or a {min, max} interval");
}

json axis_to_json(const optimizer::Axis& axis) {
  if (!axis.continuous) return axis.values;
  return {{"min", axis.lo}, {"max", axis.hi}, {"points", axis.grid_points}};
}

}  // namespace

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<PVRow> pv_sweep(const DeviceConfig& config, std::size_t points_per_stroke) {
  if (points_per_stroke < 2) throw ValidationError("need at least two points per stroke");
  const auto& dev = config.device;
  const auto& first = dev.manifold.port_map().front();
  // actuator 1 sits on chamber A in both shipped layouts; chamber B delivery
  // runs the crank the other way
  const double load =
      static_cast<double>(dev.manifold.port_load(first.motor, first.chamber));
  const double vmax = dev.actuator.max_fluid_volume_m3;
  const double stroke = drivetrain::stroke_volume(dev.crank);

  std::vector<PVRow> rows;
  for (int pct = 10; pct <= 100; pct += 10) {
    const double s = pct / 100.0;
    for (std::size_t k = 0; k < points_per_stroke; ++k) {
      const double v = vmax * (1.0 - s * static_cast<double>(k) /
                                         static_cast<double>(points_per_stroke - 1));
      const double port = std::min(v * load, stroke);
      const double delivered = first.chamber == Chamber::A ? port : stroke - port;
      const double alpha = alpha_for_displacement(dev.crank, delivered);
      rows.push_back({static_cast<double>(pct), alpha / drivetrain::kDegToRad, v,
                      actuator::pressure_from_volume(dev.actuator, v)});
    }
  }
  return rows;
}

void write_pv_csv(std::ostream& out, const std::vector<PVRow>& rows) {
  out << "stroke_percent,alpha_deg,volume_m3,pressure_pa\n";
  for (const auto& r : rows) {
    out << csv_number(r.stroke_percent) << ',' << csv_number(r.alpha_deg) << ','
        << csv_number(r.volume_m3) << ',' << csv_number(r.pressure_pa) << '\n';
  }
}

std::vector<FreqRow> freq_sweep(const DeviceConfig& config) {
  static constexpr double kStrokes[] = {10, 25, 50, 100};
  static constexpr double kFrequencies[] = {0.2, 0.5, 1, 2, 3, 5, 7, 10, 14, 20, 25, 30, 40, 50};
  std::vector<FreqRow> rows;
  for (double pct : kStrokes) {
    for (double f : kFrequencies) {
      rows.push_back({f, drivetrain::achieved_frequency(config.device.crank, f, pct / 100.0), pct});
    }
  }
  return rows;
}

void write_freq_csv(std::ostream& out, const std::vector<FreqRow>& rows) {
  out << "commanded_hz,achieved_hz,stroke_percent\n";
  for (const auto& r : rows) {
    out << csv_number(r.commanded_hz) << ',' << csv_number(r.achieved_hz) << ','
        << csv_number(r.stroke_percent) << '\n';
  }
}

TransportGrid default_transport_grid() {
  return {optimizer::default_delay_grid(), {0.2, 0.5}, {1.0}};
}

std::vector<TransportRow> transport_sweep(const DeviceConfig& config, const TransportGrid& grid) {
  const auto& dev = config.device;
  std::vector<TransportRow> rows;
  for (double cm : grid.glycerin_mass_fraction) {
    for (double f : grid.frequency_hz) {
      for (double dt : grid.onset_delay_s) {
        TransportRow row;
        row.onset_delay_s = dt;
        row.frequency_hz = f;
        row.glycerin_mass_fraction = cm;
        try {
          const auto fluid = transport::make_fluid(cm, config.temperature_c);
          row.viscosity_cp = fluid.viscosity_pa_s * 1e3;
          waveforms::WaveCommand cmd;
          cmd.amplitude_rad = dev.crank.half_range_rad();
          cmd.frequency_hz = f;
          cmd.onset_delay_s = dt;
          cmd.num_actuators = dev.manifold.num_motors();
          cmd.duration_s = 1.0 / f;
          waveforms::PatternOptions opts;
          opts.sample_period_s = config.simulation.sample_period_s;
          const auto schedule =
              waveforms::compose_pattern(waveforms::PatternKind::Peristaltic, cmd, dev, opts);
          const auto result = transport::simulate_transport(config.limb, fluid, schedule);
          row.wavelength_m = result.regime.wavelength_m;
          row.mean_flow_m3_s = result.mean_flow_m3_s;
          row.reynolds = result.reynolds;
          row.status = schedule.frequency_hz < f ? "frequency_clamped" : "ok";
        } catch (const std::exception& e) {
          row.status = std::string("infeasible: ") + e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_transport_csv(std::ostream& out, const std::vector<TransportRow>& rows) {
  out << "delta_t_ms,wavelength_m,frequency_hz,Cm,mu_cP,qbar_m3s,qbar_mL_min,reynolds,status\n";
  for (const auto& r : rows) {
    out << csv_number(r.onset_delay_s * 1e3) << ',';
    const bool ok = r.status.rfind("infeasible", 0) != 0;
    if (ok) {
      out << csv_number(r.wavelength_m) << ',' << csv_number(r.frequency_hz) << ','
          << csv_number(r.glycerin_mass_fraction) << ',' << csv_number(r.viscosity_cp) << ','
          << csv_number(r.mean_flow_m3_s) << ','
          << csv_number(transport::to_ml_per_min(r.mean_flow_m3_s)) << ','
          << csv_number(r.reynolds) << ',' << r.status << '\n';
    } else {
      std::string reason = r.status;
      for (char& c : reason) {
        if (c == ',' || c == '\n') c = ';';
      }
      out << ',' << csv_number(r.frequency_hz) << ',' << csv_number(r.glycerin_mass_fraction)
          << ",,,,," << reason << '\n';
    }
  }
}

optimizer::RegimeConstraints default_constraints(const DeviceConfig& config) {
  optimizer::RegimeConstraints c;
  c.lambda_max_m = config.limb.lambda_crit_m;
  c.pressure_cap_pa = config.safety.pressure_cap_pa;
  return c;
}

optimizer::RegimeConstraints constraints_from_json(const DeviceConfig& config, const json& doc) {
  if (!doc.is_object()) throw ConfigError("constraints must be an object");
  static const std::set<std::string> allowed = {"frequency_hz", "onset_delay_s",
                                                "amplitude_fraction", "lambda_max_m",
                                                "pressure_cap_pa"};
  for (const auto& [key, _] : doc.items()) {
    if (!allowed.contains(key)) throw ConfigError("constraints: unknown field '" + key + "'");
  }
  auto c = default_constraints(config);
  if (doc.contains("frequency_hz")) c.frequency_hz = axis_from_json(doc["frequency_hz"], "frequency_hz");
  if (doc.contains("onset_delay_s")) c.onset_delay_s = axis_from_json(doc["onset_delay_s"], "onset_delay_s");
  if (doc.contains("amplitude_fraction")) {
    c.amplitude_fraction = axis_from_json(doc["amplitude_fraction"], "amplitude_fraction");
  }
  const auto number = [&](const char* key, double& slot) {
    if (!doc.contains(key)) return;
    const auto& v = doc.at(key);
    if (v.is_string() && v.get<std::string>() == "inf") {
      slot = std::numeric_limits<double>::infinity();
    } else if (v.is_number()) {
      slot = v.get<double>();
    } else {
      throw ConfigError(std::string("constraints.") + key + " must be a number or \"inf\"");
    }
  };
  number("lambda_max_m", c.lambda_max_m);
  number("pressure_cap_pa", c.pressure_cap_pa);
  return c;
}

optimizer::RegimeResult run_optimizer(const DeviceConfig& config,
                                      const optimizer::RegimeConstraints& constraints) {
  return optimizer::optimize_regime(config.limb, config.fluid(), config.device, constraints);
}

void write_optimizer_grid_csv(std::ostream& out, const optimizer::RegimeResult& result) {
  out << "frequency_hz,delta_t_ms,amplitude_fraction,wavelength_m,max_frequency_hz,"
         "peak_pressure_pa,qbar_m3s,qbar_mL_min,frequency_ok,wavelength_ok,pressure_ok,"
         "feasible\n";
  const auto flag = [](bool b) { return b ? "1" : "0"; };
  for (const auto& e : result.grid) {
    out << csv_number(e.point.frequency_hz) << ',' << csv_number(e.point.onset_delay_s * 1e3)
        << ',' << csv_number(e.point.amplitude_fraction) << ',' << csv_number(e.wavelength_m)
        << ',' << csv_number(e.max_frequency_hz) << ',' << csv_number(e.peak_pressure_pa) << ','
        << csv_number(e.mean_flow_m3_s) << ','
        << csv_number(transport::to_ml_per_min(e.mean_flow_m3_s)) << ','
        << flag(e.frequency_ok) << ',' << flag(e.wavelength_ok) << ',' << flag(e.pressure_ok)
        << ',' << flag(e.feasible()) << '\n';
  }
}

json optimizer_summary(const DeviceConfig& config,
                       const optimizer::RegimeConstraints& constraints,
                       const optimizer::RegimeResult& result) {
  const auto& b = result.best;
  const auto finite_or_string = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return "inf";
  };
  return {
      {"v", 1},
      {"best",
       {{"frequency_hz", b.point.frequency_hz},
        {"onset_delay_s", b.point.onset_delay_s},
        {"amplitude_fraction", b.point.amplitude_fraction},
        {"wavelength_m", finite_or_string(b.wavelength_m)},
        {"max_frequency_hz", b.max_frequency_hz},
        {"peak_pressure_pa", b.peak_pressure_pa}}},
      {"mean_flow_m3_s", b.mean_flow_m3_s},
      {"mean_flow_mL_min", transport::to_ml_per_min(b.mean_flow_m3_s)},
      {"reynolds", result.reynolds},
      {"active_constraints", result.active_constraints},
      {"grid_points", result.grid.size()},
      {"constraints",
       {{"frequency_hz", axis_to_json(constraints.frequency_hz)},
        {"onset_delay_s", axis_to_json(constraints.onset_delay_s)},
        {"amplitude_fraction", axis_to_json(constraints.amplitude_fraction)},
        {"lambda_max_m", finite_or_string(constraints.lambda_max_m)},
        {"pressure_cap_pa", constraints.pressure_cap_pa}}},
      {"fluid",
       {{"glycerin_mass_fraction", config.glycerin_mass_fraction},
        {"temperature_c", config.temperature_c}}},
  };
}

}  // namespace peristalsim::experiments
