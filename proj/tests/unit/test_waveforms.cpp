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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "peristalsim/errors.hpp"
#include "peristalsim/transport.hpp"
#include "peristalsim/waveforms.hpp"
#include "support/oracle.hpp"

using namespace peristalsim;
using namespace peristalsim::waveforms;
using doctest::Approx;

namespace {

WaveCommand full_stroke(double f, double dt, double duration = 10.0) {
  WaveCommand c;
  c.amplitude_rad = drivetrain::CrankSpec{}.half_range_rad();
  c.frequency_hz = f;
  c.onset_delay_s = dt;
  c.duration_s = duration;
  return c;
}

// Lag (in samples) maximising the circular cross-correlation of y against x,
// searched over [0, max_lag].
std::size_t best_lag(const std::vector<double>& x, const std::vector<double>& y,
                     std::size_t max_lag) {
  double mx = 0, my = 0;
  for (double v : x) mx += v;
  for (double v : y) my += v;
  mx /= x.size();
  my /= y.size();
  std::size_t best = 0;
  double best_c = -1e300;
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double c = 0;
    // fixed window past every onset so the overlap does not bias short lags
    for (std::size_t i = 300; i < 1300; ++i) c += (x[i] - mx) * (y[i + k] - my);
    if (c > best_c) best_c = c, best = k;
  }
  return best;
}

}  // namespace

TEST_CASE("motor angle follows the delayed sinusoid") {
  const drivetrain::CrankSpec crank;
  SUBCASE("zero delay drives every channel identically") {
    const auto cmd = full_stroke(0.7, 0.0);
    for (double t = 0; t < 3; t += 0.013) {
      for (std::size_t n = 2; n <= 8; ++n) {
        CHECK(motor_angle(cmd, crank, n, t) == motor_angle(cmd, crank, 1, t));
      }
    }
  }
  SUBCASE("channel 1 starts at mid-range") {
    CHECK(motor_angle(full_stroke(0.2, 0.25), crank, 1, 0.0) == crank.alpha_mid_rad());
  }
  SUBCASE("1.25 s delay at 0.2 Hz is a quarter period") {
    const auto cmd = full_stroke(0.2, 1.25);
    CHECK(2 * M_PI * 0.2 * 1.25 == Approx(M_PI / 2).epsilon(1e-15));
    for (double t = 0; t < 10; t += 0.1) {
      CHECK(motor_angle(cmd, crank, 2, t + 1.25) ==
            Approx(motor_angle(cmd, crank, 1, t)).epsilon(1e-12));
    }
  }
  SUBCASE("reversing direction reverses the lag") {
    auto cmd = full_stroke(0.2, 0.25);
    cmd.direction = Direction::ProximalToDistal;
    for (double t = 1; t < 5; t += 0.1) {
      CHECK(motor_angle(cmd, crank, 2, t) ==
            Approx(motor_angle(cmd, crank, 1, t + 0.25)).epsilon(1e-12));
    }
  }
  SUBCASE("bad index") {
    CHECK_THROWS_AS(motor_angle(full_stroke(0.2, 0.25), crank, 0, 0.0), DomainError);
    CHECK_THROWS_AS(motor_angle(full_stroke(0.2, 0.25), crank, 9, 0.0), DomainError);
  }
}

TEST_CASE("spatial wave") {
  SpatialWaveParams p;
  p.amplitude_m = 1.7e-4;
  p.wavelength_m = 0.22;
  p.frequency_hz = 0.2;
  p.phase_delay_s = 0.25;
  SpatialWaveParams flat = p;
  flat.amplitude_m = 0;
  for (double x = 0; x < 0.1; x += 0.007) {
    for (double t = 0; t < 6; t += 0.37) {
      CHECK(spatial_wave(flat, x, t) == 0.0);
      CHECK(spatial_wave(p, x + p.wavelength_m, t) == Approx(spatial_wave(p, x, t)).epsilon(1e-9));
      CHECK(spatial_wave(p, x, t + 1 / p.frequency_hz) ==
            Approx(spatial_wave(p, x, t)).epsilon(1e-9));
    }
  }
}

TEST_CASE("sampled spatial wave reproduces the channel lags") {
  const drivetrain::CrankSpec crank;
  const double f = 0.2, dt = 0.25, pitch = 1.1e-2;
  const auto cmd = full_stroke(f, dt);
  SpatialWaveParams p;
  p.amplitude_m = 1.0;
  p.frequency_hz = f;
  p.pitch_m = pitch;
  p.wavelength_m = wavelength_from_delay(pitch, f, dt);
  const double quarter = 0.25 / f;  // cos leads sin by a quarter period
  for (std::size_t n = 1; n <= 8; ++n) {
    const double x = static_cast<double>(n - 1) * pitch;
    for (double t = 0; t < 10; t += 0.05) {
      const double motor =
          (motor_angle(cmd, crank, n, t + quarter) - crank.alpha_mid_rad()) / cmd.amplitude_rad;
      CHECK(spatial_wave(p, x, t) == Approx(motor).epsilon(1e-9));
    }
  }
}

TEST_CASE("wavelength from onset delay") {
  CHECK(wavelength_from_delay(1.1e-2, 0.2, 0.250) ==
        Approx(test::oracle_value("wavelength_250ms_m")).epsilon(1e-14));
  CHECK(wavelength_from_delay(1.1e-2, 0.2, 0.125) ==
        Approx(test::oracle_value("wavelength_125ms_m")).epsilon(1e-14));
  CHECK(std::isinf(wavelength_from_delay(1.1e-2, 0.2, 0.0)));
  CHECK_THROWS_AS(wavelength_from_delay(0, 0.2, 0.1), DomainError);
  CHECK_THROWS_AS(wavelength_from_delay(1e-2, 0.2, -0.1), DomainError);
}

TEST_CASE("radial amplitude") {
  const transport::LimbModel limb;
  CHECK(radial_amplitude(limb.compliance_m_per_m3, 0.0) == 0.0);
  CHECK(radial_amplitude(limb.compliance_m_per_m3, 2e-6) ==
        Approx(2 * radial_amplitude(limb.compliance_m_per_m3, 1e-6)).epsilon(1e-15));
  // full-stroke swing of one actuator lands on the calibrated occlusion
  const double swing = sinusoid_volume_amplitude(DeviceSpecs{}, drivetrain::CrankSpec{}.half_range_rad());
  CHECK(swing == Approx(2.5e-6).epsilon(1e-12));
  CHECK(radial_amplitude(limb.compliance_m_per_m3, swing) ==
        Approx(test::oracle_value("calibrated_b_m")).epsilon(1e-12));
  CHECK_THROWS_AS(radial_amplitude(-1, 1), DomainError);
}

TEST_CASE("composed schedules") {
  const DeviceSpecs specs;
  SUBCASE("length is duration over sample period") {
    const auto s = compose_pattern(PatternKind::Peristaltic, full_stroke(0.2, 0.25, 60), specs);
    CHECK(s.num_samples() == 6000);
    CHECK(s.actuator_volume_m3.size() == 8);
    CHECK(s.actuator_volume_m3[3].size() == 6000);
  }
  SUBCASE("all-in-phase traces are identical") {
    const auto s = compose_pattern(PatternKind::AllInPhase, full_stroke(0.5, 0.3, 8), specs);
    CHECK(s.command.onset_delay_s == 0.0);
    for (std::size_t a = 1; a < 8; ++a) CHECK(s.actuator_volume_m3[a] == s.actuator_volume_m3[0]);
  }
  SUBCASE("peristaltic neighbours cross-correlate at the onset delay") {
    const auto s = compose_pattern(PatternKind::Peristaltic, full_stroke(0.2, 0.25, 20), specs);
    for (std::size_t a = 0; a + 1 < 8; ++a) {
      CHECK(best_lag(s.actuator_volume_m3[a], s.actuator_volume_m3[a + 1], 200) == 25);
    }
  }
  SUBCASE("every sample respects the volume bounds") {
    for (auto kind : {PatternKind::Peristaltic, PatternKind::AllInPhase,
                      PatternKind::SequentialSqueeze}) {
      auto cmd = full_stroke(0.2, 0.25, 16);
      cmd.amplitude_rad *= kind == PatternKind::SequentialSqueeze ? 0.5 : 1.0;
      const auto s = compose_pattern(kind, cmd, specs);
      for (const auto& trace : s.actuator_volume_m3) {
        for (double v : trace) {
          CHECK(v >= 0.0);
          CHECK(v <= specs.actuator.max_fluid_volume_m3);
        }
      }
    }
  }
  SUBCASE("a smaller actuator cannot take the full stroke") {
    DeviceSpecs small = specs;
    small.actuator.max_fluid_volume_m3 = 4e-6;
    small.actuator.pv_curve = actuator::PVCurve({{0, 22e3}, {4e-6, 1e3}});
    CHECK_THROWS_AS(compose_pattern(PatternKind::Peristaltic, full_stroke(0.2, 0.25), small),
                    ValidationError);
  }
  SUBCASE("invalid commands") {
    auto cmd = full_stroke(0.2, 0.25);
    cmd.amplitude_rad *= 1.5;
    CHECK_THROWS_AS(compose_pattern(PatternKind::Peristaltic, cmd, specs), ValidationError);
    cmd = full_stroke(0.2, 0.25);
    cmd.num_actuators = 2;
    CHECK_THROWS_AS(compose_pattern(PatternKind::Peristaltic, cmd, specs), ValidationError);
    cmd = full_stroke(0.2, 0.25);
    cmd.start_actuator = 9;
    CHECK_THROWS_AS(compose_pattern(PatternKind::Peristaltic, cmd, specs), ValidationError);
    cmd = full_stroke(-0.2, 0.25);
    CHECK_THROWS_AS(compose_pattern(PatternKind::Peristaltic, cmd, specs), ValidationError);
    cmd = full_stroke(0.2, 0.25, 0.001);
    CHECK_THROWS_AS(compose_pattern(PatternKind::Peristaltic, cmd, specs), ValidationError);
  }
  SUBCASE("commanded frequency above the servo ceiling is clamped") {
    const auto s = compose_pattern(PatternKind::Peristaltic, full_stroke(5.0, 0.01, 2), specs);
    CHECK(s.commanded_frequency_hz == 5.0);
    CHECK(s.frequency_hz == Approx(drivetrain::max_frequency(specs.crank, 1.0)).epsilon(1e-14));
  }
}

TEST_CASE("sequential squeeze") {
  const DeviceSpecs specs;
  auto cmd = full_stroke(0.2, 0.0, 16);
  cmd.amplitude_rad *= 0.5;
  for (auto profile : {SqueezeProfile::HalfSine, SqueezeProfile::Trapezoid}) {
    PatternOptions opts;
    opts.squeeze_time_s = 1.0;
    opts.squeeze_profile = profile;
    const auto s = compose_pattern(PatternKind::SequentialSqueeze, cmd, specs, opts);
    CHECK(s.frequency_hz == Approx(1.0 / 8.0).epsilon(1e-15));
    const double vmax = specs.actuator.max_fluid_volume_m3;
    for (std::size_t a = 0; a < 8; ++a) {
      const auto& v = s.actuator_volume_m3[a];
      // cycle of exactly 8 s: the second cycle repeats the first
      for (std::size_t i = 0; i < 800; ++i) CHECK(v[i] == Approx(v[i + 800]).epsilon(1e-12));
      // actuator a + 1 squeezes only inside [a, a + 1) s of each cycle
      for (std::size_t i = 0; i < 800; ++i) {
        const bool window = i >= a * 100 && i < (a + 1) * 100;
        if (!window) CHECK(v[i] == Approx(vmax).epsilon(1e-12));
        if (window && i % 100 == 50) CHECK(v[i] < vmax * 0.9);
      }
    }
    CHECK(squeezing_actuator(cmd, 1.0, 0.5) == 1);
    CHECK(squeezing_actuator(cmd, 1.0, 7.5) == 8);
    CHECK(squeezing_actuator(cmd, 1.0, 8.5) == 1);
  }
  SUBCASE("start actuator and direction reindex the order") {
    auto c = cmd;
    c.start_actuator = 3;
    c.direction = Direction::ProximalToDistal;
    CHECK(squeezing_actuator(c, 1.0, 0.5) == 3);
    CHECK(squeezing_actuator(c, 1.0, 1.5) == 2);
    CHECK(squeezing_actuator(c, 1.0, 2.5) == 1);
    CHECK(squeezing_actuator(c, 1.0, 3.5) == 8);
  }
  SUBCASE("a squeeze faster than the servo is rejected") {
    PatternOptions opts;
    opts.squeeze_time_s = 0.1;
    CHECK_THROWS_AS(compose_pattern(PatternKind::SequentialSqueeze, cmd, specs, opts),
                    ValidationError);
  }
}

TEST_CASE("string forms round trip") {
  for (auto k : {PatternKind::Peristaltic, PatternKind::AllInPhase, PatternKind::SequentialSqueeze}) {
    CHECK(kind_from_string(to_string(k)) == k);
  }
  for (auto d : {Direction::DistalToProximal, Direction::ProximalToDistal}) {
    CHECK(direction_from_string(to_string(d)) == d);
  }
  for (auto p : {SqueezeProfile::HalfSine, SqueezeProfile::Trapezoid}) {
    CHECK(squeeze_profile_from_string(to_string(p)) == p);
  }
  CHECK_THROWS_AS(kind_from_string("wave"), ValidationError);
}
