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

#include "peristalsim/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "peristalsim/errors.hpp"

namespace peristalsim {

namespace {

using nlohmann::json;
using drivetrain::kDegToRad;

// Reads an object section, rejecting keys outside `allowed`.
class Section {
 public:
  Section(const json& doc, std::string path, std::set<std::string> allowed)
      : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_ + ": expected an object");
    for (const auto& [key, _] : doc_.items()) {
      if (!allowed.contains(key)) throw ConfigError(path_ + ": unknown field '" + key + "'");
    }
  }

  void number(const char* key, double& out) const {
    if (!doc_.contains(key)) return;
    const auto& v = doc_.at(key);
    if (v.is_number()) {
      out = v.get<double>();
    } else if (v.is_string() && v.get<std::string>() == "inf") {
      out = std::numeric_limits<double>::infinity();
    } else {
      throw ConfigError(path_ + "." + key + ": expected a number");
    }
  }

  void degrees(const char* key, double& out_rad) const {
    if (!doc_.contains(key)) return;
    double deg = out_rad / kDegToRad;
    number(key, deg);
    out_rad = deg * kDegToRad;
  }

  template <typename T>
  void integer(const char* key, T& out) const {
    if (!doc_.contains(key)) return;
    const auto& v = doc_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(path_ + "." + key + ": expected a non-negative integer");
    }
    out = static_cast<T>(v.get<long long>());
  }

  const json* child(const char* key) const {
    return doc_.contains(key) ? &doc_.at(key) : nullptr;
  }

  std::string string(const char* key, std::string fallback) const {
    if (!doc_.contains(key)) return fallback;
    if (!doc_.at(key).is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
    return doc_.at(key).get<std::string>();
  }

  const std::string& path() const { return path_; }

 private:
  const json& doc_;
  std::string path_;
};

void read_actuator(const json& doc, actuator::ActuatorSpec& a) {
  Section s(doc, "actuator",
            {"tube_outer_diameter_m", "tube_inner_diameter_m", "stitch_length_m",
             "wrinkle_ratio", "width_m", "thickness_m", "max_fluid_volume_m3", "pv_curve"});
  s.number("tube_outer_diameter_m", a.tube_outer_diameter_m);
  s.number("tube_inner_diameter_m", a.tube_inner_diameter_m);
  s.number("stitch_length_m", a.stitch_length_m);
  s.number("wrinkle_ratio", a.wrinkle_ratio);
  s.number("width_m", a.width_m);
  s.number("thickness_m", a.thickness_m);
  s.number("max_fluid_volume_m3", a.max_fluid_volume_m3);
  if (const json* curve = s.child("pv_curve")) {
    if (!curve->is_array()) throw ConfigError("actuator.pv_curve: expected an array");
    std::vector<actuator::PVPoint> pts;
    for (std::size_t i = 0; i < curve->size(); ++i) {
      Section knot((*curve)[i], "actuator.pv_curve[" + std::to_string(i) + "]",
                   {"volume_m3", "pressure_pa"});
      actuator::PVPoint p{std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
      knot.number("volume_m3", p.volume_m3);
      knot.number("pressure_pa", p.pressure_pa);
      if (std::isnan(p.volume_m3) || std::isnan(p.pressure_pa)) {
        throw ConfigError(knot.path() + ": needs volume_m3 and pressure_pa");
      }
      pts.push_back(p);
    }
    a.pv_curve = actuator::PVCurve(std::move(pts));
  }
}

void read_manifold(const json& doc, drivetrain::Manifold& m) {
  Section s(doc, "manifold", {"num_motors", "port_map"});
  std::size_t motors = m.num_motors();
  s.integer("num_motors", motors);
  const json* map = s.child("port_map");
  if (map == nullptr) {
    if (motors == 2) m = drivetrain::default_two_piston_manifold();
    else if (motors == 8) m = drivetrain::eight_piston_manifold();
    else throw ConfigError("manifold.num_motors must be 2 or 8");
    return;
  }
  if (!map->is_array()) throw ConfigError("manifold.port_map: expected an array");
  std::vector<drivetrain::PortAssignment> ports(map->size());
  std::vector<bool> seen(map->size(), false);
  for (std::size_t i = 0; i < map->size(); ++i) {
    const std::string path = "manifold.port_map[" + std::to_string(i) + "]";
    Section e((*map)[i], path, {"actuator", "motor", "chamber"});
    std::size_t actuator = 0, motor = 0;
    e.integer("actuator", actuator);
    e.integer("motor", motor);
    const std::string chamber = e.string("chamber", "");
    if (actuator < 1 || actuator > map->size()) {
      throw ConfigError(path + ".actuator out of range");
    }
    if (seen[actuator - 1]) {
      throw ConfigError(path + ": actuator " + std::to_string(actuator) + " assigned twice");
    }
    if (motor < 1) throw ConfigError(path + ".motor must be >= 1");
    if (chamber != "A" && chamber != "B") throw ConfigError(path + ".chamber must be A or B");
    seen[actuator - 1] = true;
    ports[actuator - 1] = {motor - 1, chamber == "A" ? drivetrain::Chamber::A
                                                     : drivetrain::Chamber::B};
  }
  m = drivetrain::Manifold(motors, std::move(ports));
}

json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

void SafetyLimits::validate() const {
  if (!(pressure_cap_pa > 0 && max_frequency_cap_hz > 0)) {
    throw ConfigError("safety caps must be positive");
  }
  if (pressure_cap_pa > kHardCeiling_pa) {
    throw ConfigError("safety.pressure_cap_pa exceeds the 30 kPa hard ceiling");
  }
}

std::size_t SimulationSettings::telemetry_decimation() const {
  return static_cast<std::size_t>(std::llround(telemetry_period_s / step_s));
}

void SimulationSettings::validate() const {
  if (!(step_s > 0 && telemetry_period_s > 0 && sample_period_s > 0)) {
    throw ConfigError("simulation periods must be positive");
  }
  const double ratio = telemetry_period_s / step_s;
  if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ConfigError("simulation.telemetry_period_s must be a whole number of steps");
  }
}

void DeviceConfig::validate() const {
  device.actuator.validate();
  device.crank.validate();
  if (device.manifold.num_actuators() == 0) throw ConfigError("manifold is empty");
  fixture.validate();
  limb.validate();
  safety.validate();
  simulation.validate();
  (void)fluid();  // range checks on the mixture
  // the cylinders must be able to fill every actuator without overfilling it
  const auto& m = device.manifold;
  for (const auto& p : m.port_map()) {
    const double share = drivetrain::stroke_volume(device.crank) /
                         static_cast<double>(m.port_load(p.motor, p.chamber));
    if (share > device.actuator.max_fluid_volume_m3 * (1 + 1e-9)) {
      throw ConfigError("crank stroke volume overfills actuators on motor " +
                        std::to_string(p.motor + 1));
    }
  }
}

DeviceConfig config_from_json(const json& doc) {
  DeviceConfig c;
  try {
    Section root(doc, "config",
                 {"actuator", "fixture", "crank", "manifold", "limb", "fluid", "safety",
                  "simulation"});
    if (const json* j = root.child("actuator")) read_actuator(*j, c.device.actuator);
    if (const json* j = root.child("fixture")) {
      Section s(*j, "fixture", {"cylinder_diameter_m", "sensor_arc_deg", "actuator_width_m"});
      s.number("cylinder_diameter_m", c.fixture.cylinder_diameter_m);
      s.degrees("sensor_arc_deg", c.fixture.sensor_arc_rad);
      s.number("actuator_width_m", c.fixture.actuator_width_m);
    }
    if (const json* j = root.child("crank")) {
      auto& k = c.device.crank;
      Section s(*j, "crank",
                {"crank_length_m", "rod_length_m", "alpha_min_deg", "alpha_max_deg",
                 "bore_area_m2", "torque_max_nm", "omega_max_rad_s"});
      s.number("crank_length_m", k.crank_length_m);
      s.number("rod_length_m", k.rod_length_m);
      s.degrees("alpha_min_deg", k.alpha_min_rad);
      s.degrees("alpha_max_deg", k.alpha_max_rad);
      s.number("bore_area_m2", k.bore_area_m2);
      s.number("torque_max_nm", k.torque_max_nm);
      s.number("omega_max_rad_s", k.omega_max_rad_s);
    }
    if (const json* j = root.child("manifold")) read_manifold(*j, c.device.manifold);
    if (const json* j = root.child("limb")) {
      auto& l = c.limb;
      Section s(*j, "limb",
                {"vein_mean_radius_m", "occlusion_amplitude_m", "actuator_pitch_m",
                 "actuation_length_m", "lambda_crit_m", "rest_radius_m",
                 "compliance_m_per_m3"});
      s.number("vein_mean_radius_m", l.vein_mean_radius_m);
      s.number("occlusion_amplitude_m", l.occlusion_amplitude_m);
      s.number("actuator_pitch_m", l.actuator_pitch_m);
      s.number("actuation_length_m", l.actuation_length_m);
      s.number("lambda_crit_m", l.lambda_crit_m);
      s.number("rest_radius_m", l.rest_radius_m);
      s.number("compliance_m_per_m3", l.compliance_m_per_m3);
    }
    if (const json* j = root.child("fluid")) {
      Section s(*j, "fluid", {"glycerin_mass_fraction", "temperature_c"});
      s.number("glycerin_mass_fraction", c.glycerin_mass_fraction);
      s.number("temperature_c", c.temperature_c);
    }
    if (const json* j = root.child("safety")) {
      Section s(*j, "safety", {"pressure_cap_pa", "max_frequency_cap_hz"});
      s.number("pressure_cap_pa", c.safety.pressure_cap_pa);
      s.number("max_frequency_cap_hz", c.safety.max_frequency_cap_hz);
    }
    if (const json* j = root.child("simulation")) {
      auto& sim = c.simulation;
      Section s(*j, "simulation",
                {"step_s", "telemetry_period_s", "sample_period_s", "idle_behavior",
                 "squeeze_profile"});
      s.number("step_s", sim.step_s);
      s.number("telemetry_period_s", sim.telemetry_period_s);
      s.number("sample_period_s", sim.sample_period_s);
      const auto idle = s.string("idle_behavior", "hold");
      if (idle == "hold") sim.idle_behavior = IdleBehavior::Hold;
      else if (idle == "release") sim.idle_behavior = IdleBehavior::Release;
      else throw ConfigError("simulation.idle_behavior must be hold or release");
      sim.squeeze_profile =
          waveforms::squeeze_profile_from_string(s.string("squeeze_profile", "half_sine"));
    }
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

DeviceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const DeviceConfig& c) {
  const auto& a = c.device.actuator;
  json curve = json::array();
  for (const auto& p : a.pv_curve.points()) {
    curve.push_back({{"volume_m3", p.volume_m3}, {"pressure_pa", p.pressure_pa}});
  }
  json ports = json::array();
  const auto& map = c.device.manifold.port_map();
  for (std::size_t i = 0; i < map.size(); ++i) {
    ports.push_back({{"actuator", i + 1},
                     {"motor", map[i].motor + 1},
                     {"chamber", map[i].chamber == drivetrain::Chamber::A ? "A" : "B"}});
  }
  const auto& k = c.device.crank;
  const auto& l = c.limb;
  return {
      {"actuator",
       {{"tube_outer_diameter_m", a.tube_outer_diameter_m},
        {"tube_inner_diameter_m", a.tube_inner_diameter_m},
        {"stitch_length_m", a.stitch_length_m},
        {"wrinkle_ratio", a.wrinkle_ratio},
        {"width_m", a.width_m},
        {"thickness_m", a.thickness_m},
        {"max_fluid_volume_m3", a.max_fluid_volume_m3},
        {"pv_curve", curve}}},
      {"fixture",
       {{"cylinder_diameter_m", c.fixture.cylinder_diameter_m},
        {"sensor_arc_deg", c.fixture.sensor_arc_rad / kDegToRad},
        {"actuator_width_m", c.fixture.actuator_width_m}}},
      {"crank",
       {{"crank_length_m", k.crank_length_m},
        {"rod_length_m", k.rod_length_m},
        {"alpha_min_deg", k.alpha_min_rad / kDegToRad},
        {"alpha_max_deg", k.alpha_max_rad / kDegToRad},
        {"bore_area_m2", k.bore_area_m2},
        {"torque_max_nm", k.torque_max_nm},
        {"omega_max_rad_s", k.omega_max_rad_s}}},
      {"manifold", {{"num_motors", c.device.manifold.num_motors()}, {"port_map", ports}}},
      {"limb",
       {{"vein_mean_radius_m", l.vein_mean_radius_m},
        {"occlusion_amplitude_m", l.occlusion_amplitude_m},
        {"actuator_pitch_m", l.actuator_pitch_m},
        {"actuation_length_m", l.actuation_length_m},
        {"lambda_crit_m", number_or_inf(l.lambda_crit_m)},
        {"rest_radius_m", l.rest_radius_m},
        {"compliance_m_per_m3", l.compliance_m_per_m3}}},
      {"fluid",
       {{"glycerin_mass_fraction", c.glycerin_mass_fraction},
        {"temperature_c", c.temperature_c}}},
      {"safety",
       {{"pressure_cap_pa", c.safety.pressure_cap_pa},
        {"max_frequency_cap_hz", c.safety.max_frequency_cap_hz}}},
      {"simulation",
       {{"step_s", c.simulation.step_s},
        {"telemetry_period_s", c.simulation.telemetry_period_s},
        {"sample_period_s", c.simulation.sample_period_s},
        {"idle_behavior",
         c.simulation.idle_behavior == IdleBehavior::Hold ? "hold" : "release"},
        {"squeeze_profile", std::string(waveforms::to_string(c.simulation.squeeze_profile))}}},
  };
}

}  // namespace peristalsim
