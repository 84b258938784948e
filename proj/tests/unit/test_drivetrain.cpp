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

#include <array>
#include <cmath>

#include "doctest.h"
#include "peristalsim/drivetrain.hpp"
#include "peristalsim/errors.hpp"
#include "peristalsim/waveforms.hpp"
#include "support/oracle.hpp"

using namespace peristalsim;
using namespace peristalsim::drivetrain;
using doctest::Approx;

TEST_CASE("slider-crank kinematics at the landmark angles") {
  const CrankSpec s;
  const double r = s.crank_length_m;
  CHECK(piston_position(s, 90 * kDegToRad) == s.rod_length_m);
  CHECK(piston_position(s, 30 * kDegToRad) ==
        Approx(test::oracle_value("x30_over_r") * r).epsilon(1e-12));
  CHECK(piston_position(s, 30 * kDegToRad) == Approx(std::sqrt(3.0) * r).epsilon(1e-12));
  CHECK(piston_position(s, 120 * kDegToRad) ==
        Approx(test::oracle_value("x120_over_r") * r).epsilon(1e-12));
  CHECK(piston_position(s, 120 * kDegToRad) == Approx(0.49098 * r).epsilon(1e-5));
}

TEST_CASE("piston position ordering and continuity") {
  const CrankSpec s;
  CHECK(piston_position(s, 30 * kDegToRad) > piston_position(s, 90 * kDegToRad));
  CHECK(piston_position(s, 90 * kDegToRad) > piston_position(s, 120 * kDegToRad));
  double prev_jump = 1.0;
  for (int n : {100, 1000, 10000}) {
    double jump = 0.0;
    const double h = (s.alpha_max_rad - s.alpha_min_rad) / n;
    for (int i = 0; i < n; ++i) {
      const double a = s.alpha_min_rad + i * h;
      jump = std::max(jump, std::abs(piston_position(s, a + h) - piston_position(s, a)));
    }
    CHECK(jump < prev_jump);
    CHECK(jump < 3 * s.crank_length_m * h);  // Lipschitz bound
    prev_jump = jump;
  }
}

TEST_CASE("angles outside the operating range are domain errors") {
  const CrankSpec s;
  CHECK_THROWS_AS(piston_position(s, 29 * kDegToRad), DomainError);
  CHECK_THROWS_AS(piston_position(s, 121 * kDegToRad), DomainError);
  CHECK_THROWS_AS(crank_torque(s, 0.0, 100), DomainError);
  CHECK_THROWS_AS(displaced_volume(s, 2.2), DomainError);
}

TEST_CASE("crank torque") {
  const CrankSpec s;
  CHECK(crank_torque(s, 90 * kDegToRad, 100) == Approx(2.0).epsilon(1e-15));
  CHECK(crank_torque(s, 30 * kDegToRad, 100) == Approx(1.0).epsilon(1e-14));
  CHECK(crank_torque(s, 45 * kDegToRad, 100) ==
        Approx(test::oracle_value("torque_45deg_nm")).epsilon(1e-14));
  double best = -1, best_angle = 0;
  for (int i = 0; i <= 9000; ++i) {
    const double a = s.alpha_min_rad + (s.alpha_max_rad - s.alpha_min_rad) * i / 9000.0;
    const double t = crank_torque(s, a, 100);
    if (t > best) best = t, best_angle = a;
  }
  CHECK(best_angle == Approx(90 * kDegToRad).epsilon(1e-9));
}

TEST_CASE("displaced volume and chamber complementarity") {
  const CrankSpec s;
  CHECK(displaced_volume(s, s.alpha_min_rad) == 0.0);
  CHECK(stroke_volume(s) == Approx(test::oracle_value("full_stroke_over_Ar") * s.bore_area_m2 *
                                   s.crank_length_m)
                                .epsilon(1e-12));
  CHECK(s.bore_area_m2 == Approx(test::oracle_value("bore_eight_piston_m2")).epsilon(1e-14));
  CHECK(stroke_volume(s) == Approx(5e-6).epsilon(1e-12));
  const double total = stroke_volume(s);
  for (int i = 0; i <= 1000; ++i) {
    const double a = s.alpha_min_rad + (s.alpha_max_rad - s.alpha_min_rad) * i / 1000.0;
    const auto v = chamber_volumes(s, a);
    CHECK(std::abs(v.a_m3 + v.b_m3 - total) <= 1e-12 * total);
  }
}

TEST_CASE("servo frequency ceiling") {
  const CrankSpec s;
  CHECK(s.omega_max_rad_s == Approx(test::oracle_value("omega_for_20hz_at_10pct")).epsilon(1e-15));
  CHECK(max_frequency(s, 0.10) >= 20.0 - 1e-12);
  CHECK(max_frequency(s, 0.05) == Approx(2 * max_frequency(s, 0.10)).epsilon(1e-14));
  double prev = max_frequency(s, 0.01);
  for (int i = 2; i <= 100; ++i) {
    const double f = max_frequency(s, i / 100.0);
    CHECK(f < prev);
    prev = f;
  }
  CrankSpec quick = s;
  quick.omega_max_rad_s = 19.7;
  CHECK(max_frequency(quick, 1.0) ==
        Approx(test::oracle_value("max_freq_full_stroke_omega_19_7")).epsilon(1e-14));
  CHECK(max_frequency(quick, 1.0) == Approx(4.0).epsilon(0.01));
  CHECK_THROWS_AS(max_frequency(s, 0.0), DomainError);
  CHECK_THROWS_AS(max_frequency(s, 1.5), DomainError);
  CHECK(achieved_frequency(s, 50.0, 0.1) == Approx(20.0).epsilon(1e-12));
  CHECK(achieved_frequency(s, 5.0, 0.1) == 5.0);
}

TEST_CASE("manifold routing") {
  SUBCASE("eight-piston routing is the identity") {
    const auto m = eight_piston_manifold();
    std::vector<ChamberVolumes> in;
    for (int i = 0; i < 8; ++i) in.push_back({i * 1e-7, 5e-6 - i * 1e-7});
    const auto out = route_volumes(m, in);
    REQUIRE(out.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(out[i] == in[i].a_m3);
  }
  SUBCASE("two-piston ports split equally") {
    const auto m = default_two_piston_manifold();
    std::array<ChamberVolumes, 2> in{{{2e-6, 3e-6}, {4e-6, 6e-6}}};
    const auto out = route_volumes(m, in);
    CHECK(out[0] == 1e-6);  // actuators 1 and 5 on motor 1 A
    CHECK(out[4] == 1e-6);
    CHECK(out[2] == 1.5e-6);  // 3 and 7 on motor 1 B
    CHECK(out[6] == 1.5e-6);
    CHECK(out[1] == 2e-6);  // 2 and 6 on motor 2 A
    CHECK(out[3] == 3e-6);  // 4 and 8 on motor 2 B
  }
  SUBCASE("π/2 command delay gives a quarter-period phase step per actuator") {
    DeviceSpecs specs;
    specs.manifold = default_two_piston_manifold();
    waveforms::WaveCommand cmd;
    cmd.frequency_hz = 0.2;
    cmd.onset_delay_s = 1.25;  // quarter of the 5 s period
    cmd.num_actuators = 2;
    const auto lags = waveforms::actuator_lags(cmd, specs.manifold, 0.2);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(lags[i] == Approx(1.25 * static_cast<double>(i % 4)).epsilon(1e-12));
    }
  }
  SUBCASE("inconsistent maps are configuration errors") {
    using enum Chamber;
    CHECK_THROWS_AS(Manifold(3, {{0, A}}), ConfigError);
    CHECK_THROWS_AS(Manifold(2, {{0, A}, {0, A}, {0, B}, {1, B}, {0, A}, {1, A}, {0, B}, {1, B}}),
                    ConfigError);
    CHECK_THROWS_AS(Manifold(8, {{0, A}, {9, A}}), ConfigError);
    std::vector<PortAssignment> b_side;
    for (std::size_t i = 0; i < 8; ++i) b_side.push_back({i, B});
    CHECK_THROWS_AS(Manifold(8, b_side), ConfigError);
    const auto m = eight_piston_manifold();
    std::vector<ChamberVolumes> short_in(3);
    CHECK_THROWS_AS(route_volumes(m, short_in), ConfigError);
  }
}

TEST_CASE("crank spec validation") {
  CrankSpec s;
  s.rod_length_m = 0.5 * s.crank_length_m;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = CrankSpec{};
  s.alpha_max_rad = s.alpha_min_rad;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = CrankSpec{};
  s.omega_max_rad_s = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_NOTHROW(CrankSpec{}.validate());
}
