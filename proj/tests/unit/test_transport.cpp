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
#include <random>

#include "doctest.h"
#include "peristalsim/errors.hpp"
#include "peristalsim/transport.hpp"
#include "support/oracle.hpp"

using namespace peristalsim;
using namespace peristalsim::transport;
using doctest::Approx;

TEST_CASE("closed-form mean flow") {
  const double a = 3e-3;
  CHECK(mean_flow_from_speed(a, 0.0, 0.044) == 0.0);
  CHECK(mean_flow_from_speed(a, a, 0.044) ==
        Approx(1.5 * M_PI * 0.044 * a * a).epsilon(1e-12));
  CHECK(to_ml_per_min(mean_flow_from_speed(a, 0.17e-3, 0.044)) ==
        Approx(test::oracle_value("closed_form_b017_c044_ml_min")).epsilon(1e-12));
  CHECK(to_ml_per_min(mean_flow_from_speed(a, 0.17e-3, 0.044)) == Approx(0.95).epsilon(0.01));
  CHECK_THROWS_AS(mean_flow_from_speed(a, 1.01 * a, 0.044), DomainError);
  CHECK_THROWS_AS(mean_flow_from_speed(a, 1e-4, -1.0), DomainError);
}

TEST_CASE("wavelength form is the speed form with c = lambda f") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double a = 1e-3 + 9e-3 * u(rng);
    const double b = a * u(rng);
    const double lam = 0.01 + u(rng);
    const double f = 0.05 + 10 * u(rng);
    const double q1 = mean_flow_from_wavelength(a, b, lam, f);
    const double q2 = mean_flow_from_speed(a, b, lam * f);
    CHECK(std::abs(q1 - q2) <= 1e-12 * std::abs(q2));
  }
  const double q = mean_flow_from_wavelength(3e-3, 2e-4, 0.22, 0.2);
  CHECK(mean_flow_from_wavelength(3e-3, 2e-4, 0.44, 0.2) == Approx(2 * q).epsilon(1e-14));
  CHECK(mean_flow_from_wavelength(3e-3, 2e-4, 0.22, 0.5) == Approx(2.5 * q).epsilon(1e-14));
}

TEST_CASE("mean flow is strictly increasing in b, lambda, f and c") {
  const double a = 3e-3;
  double prev = 0;
  for (int i = 1; i <= 100; ++i) {
    const double q = mean_flow_from_speed(a, a * i / 100.0, 0.05);
    CHECK(q > prev);
    prev = q;
  }
  prev = 0;
  for (int i = 1; i <= 50; ++i) {
    const double q = mean_flow_from_wavelength(a, 2e-4, 0.01 * i, 0.2);
    CHECK(q > prev);
    prev = q;
  }
  prev = 0;
  for (int i = 1; i <= 50; ++i) {
    const double q = mean_flow_from_wavelength(a, 2e-4, 0.22, 0.1 * i);
    CHECK(q > prev);
    prev = q;
  }
}

TEST_CASE("lubrication oracle") {
  const auto& o = test::oracle();
  const auto ratios = o.at("oracle_b_over_a").get<std::vector<double>>();
  const auto reference = o.at("oracle_mean_flow_m3_s").get<std::vector<double>>();
  const double a = 3e-3, lam = 0.22, f = 0.2, mu = 1.17864;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double b = a * ratios[i];
    const auto rep = lubrication_oracle_report(a, b, lam, f, mu);
    CAPTURE(ratios[i]);
    CHECK(rep.stations >= 2048);
    // against the independent scipy quadrature of the same balance
    CHECK(rep.mean_flow_m3_s == Approx(reference[i]).epsilon(1e-8));
    CHECK(std::abs(rep.mean_flow_m3_s / mean_flow_from_wavelength(a, b, lam, f) - 1) < 1e-6);
  }
  SUBCASE("viscosity drops out") {
    const double q5 = lubrication_oracle(a, 0.3 * a, lam, f, 5e-3);
    for (double mu_cp : {50.0, 1179.0}) {
      CHECK(std::abs(lubrication_oracle(a, 0.3 * a, lam, f, mu_cp * 1e-3) / q5 - 1) < 1e-9);
    }
  }
  SUBCASE("vanishing occlusion") {
    // resolvable only down to the root tolerance on the wave-frame flow
    const double scale = M_PI * lam * f * a * a;
    CHECK(std::abs(lubrication_oracle(a, 1e-9 * a, lam, f, 1.0)) < 1e-10 * scale);
    CHECK(std::abs(lubrication_oracle(a, 1e-3 * a, lam, f, 1.0) /
                   mean_flow_from_wavelength(a, 1e-3 * a, lam, f) -
                   1) < 1e-3);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(lubrication_oracle(a, a, lam, f, 1.0), DomainError);
    CHECK_THROWS_AS(lubrication_oracle(a, 0.5 * a, lam, f, 0.0), DomainError);
  }
  SUBCASE("non-convergence reports diagnostics") {
    OracleOptions tight;
    tight.initial_stations = 4;
    tight.max_stations = 8;
    tight.quadrature_tolerance = 1e-15;
    CHECK_THROWS_AS(lubrication_oracle(a, 0.9 * a, lam, f, 1.0, tight), NumericError);
  }
}

TEST_CASE("glycerin-water properties") {
  const auto& table = test::oracle().at("table");
  for (const auto& row : table) {
    const double cm = row.at("cm").get<double>();
    CAPTURE(cm);
    const double mu_cp = cheng_viscosity(cm, 22.0) * 1e3;
    CHECK(mu_cp == Approx(row.at("cheng_cp_22c").get<double>()).epsilon(1e-12));
    CHECK(mu_cp == Approx(row.at("viscosity_cp").get<double>()).epsilon(0.02));
    const double rho = mixture_density(cm, 22.0);
    CHECK(rho == Approx(row.at("mixing_density_kg_m3").get<double>()).epsilon(1e-12));
    CHECK(rho / 1000 == Approx(row.at("density_g_cm3").get<double>()).epsilon(0.01));
    CHECK(table_reynolds(make_fluid(cm)) ==
          Approx(row.at("reynolds_3_18e-6").get<double>()).epsilon(1e-12));
  }
  CHECK(cheng_viscosity(1.0, 22.0) * 1e3 == Approx(1178.6).epsilon(1e-4));
  CHECK(cheng_viscosity(0.5, 22.0) * 1e3 == Approx(5.57).epsilon(1e-3));
  CHECK(cheng_viscosity(0.0, 20.0) * 1e3 ==
        Approx(test::oracle_value("water_20c_cp")).epsilon(1e-12));
  CHECK(cheng_viscosity(0.0, 20.0) * 1e3 == Approx(1.00).epsilon(0.01));
  CHECK(mixture_density(1.0, 22) == Approx(1260.0).epsilon(1e-12));
  CHECK(mixture_density(0.0, 22) == Approx(998.0).epsilon(1e-12));
  CHECK(mixture_density(0.5, 22) / 1000 == Approx(1.114).epsilon(1e-3));
  CHECK_THROWS_AS(cheng_viscosity(1.1, 22), DomainError);
  CHECK_THROWS_AS(cheng_viscosity(0.5, 101), DomainError);
  CHECK_THROWS_AS(mixture_density(-0.1, 22), DomainError);
}

TEST_CASE("viscosity is monotone in concentration and temperature") {
  for (double t : {5.0, 22.0, 60.0}) {
    double prev = 0;
    for (int i = 0; i <= 100; ++i) {
      const double mu = cheng_viscosity(i / 100.0, t);
      CHECK(mu > prev);
      prev = mu;
    }
  }
  for (double cm : {0.0, 0.5, 0.9, 1.0}) {
    double prev = 1e9;
    for (int t = 0; t <= 100; t += 2) {
      const double mu = cheng_viscosity(cm, t);
      CHECK(mu < prev);
      prev = mu;
    }
  }
}

TEST_CASE("Reynolds numbers") {
  const auto f1 = make_fluid(1.0);
  const auto f05 = make_fluid(0.5);
  CHECK(reynolds_report(f1, 0.0, 3e-3) == 0.0);
  // the tabulated velocity scale: v * 2a = 3.18e-6 m^2/s
  const double a = 3e-3;
  const double q = kTableVelocityDiameter_m2_s / (2 * a) * M_PI * a * a;
  CHECK(reynolds_report(f1, q, a) == Approx(table_reynolds(f1)).epsilon(1e-12));
  CHECK(table_reynolds(f1) == Approx(0.0034).epsilon(0.01));
  CHECK(table_reynolds(f05) / table_reynolds(f1) == Approx(0.6427 / 0.0034).epsilon(0.02));
}

TEST_CASE("occlusion calibration") {
  const double b = calibrate_occlusion(3e-3, 0.22, 0.2, 1e-6 / 60);
  CHECK(b == Approx(test::oracle_value("calibrated_b_m")).epsilon(1e-12));
  CHECK(kCalibratedOcclusion_m == Approx(b).epsilon(1e-14));
  CHECK(b == Approx(0.17e-3).epsilon(0.03));
  CHECK_THROWS_AS(calibrate_occlusion(3e-3, 0.22, 0.2, 1.0), DomainError);
}

TEST_CASE("regime flow and the long-wavelength correction") {
  LimbModel limb;
  const auto r22 = make_regime(limb, 0.2, 0.25, 2.5e-6);
  CHECK(r22.wavelength_m == Approx(0.22).epsilon(1e-14));
  CHECK(to_ml_per_min(regime_mean_flow(limb, r22)) == Approx(1.0).epsilon(1e-10));
  const auto r44 = make_regime(limb, 0.2, 0.125, 2.5e-6);
  CHECK(regime_mean_flow(limb, r44) == Approx(0.5 * regime_mean_flow(limb, r22)).epsilon(1e-14));
  CHECK(regime_mean_flow(limb, make_regime(limb, 0.2, 0.0, 2.5e-6)) == 0.0);
  CHECK(regime_mean_flow(limb, make_regime(limb, 0.2, 0.25, 2.5e-6, -1)) ==
        -regime_mean_flow(limb, r22));
  limb.lambda_crit_m = std::numeric_limits<double>::infinity();
  CHECK(regime_mean_flow(limb, r44) ==
        Approx(mean_flow_from_wavelength(3e-3, r44.occlusion_m, 0.44, 0.2)).epsilon(1e-14));
  SUBCASE("occlusion saturates at the vein radius") {
    const auto r = make_regime(LimbModel{}, 0.2, 0.25, 1.0);
    CHECK(r.occlusion_m == LimbModel{}.vein_mean_radius_m);
  }
}

TEST_CASE("instantaneous flow averages to the mean over a period") {
  const LimbModel limb;
  for (double dt : {0.125, 0.25, 0.5}) {
    const auto r = make_regime(limb, 0.2, dt, 2.5e-6);
    const int n = 4000;
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += instantaneous_flow(limb, r, 5.0 * i / n);
    CHECK(sum / n == Approx(regime_mean_flow(limb, r)).epsilon(1e-10));
  }
}

TEST_CASE("simulated transport over a schedule") {
  const DeviceSpecs specs;
  const LimbModel limb;
  waveforms::WaveCommand cmd;
  cmd.amplitude_rad = specs.crank.half_range_rad();
  cmd.frequency_hz = 0.2;
  cmd.onset_delay_s = 0.25;
  cmd.duration_s = 60;
  const auto s = waveforms::compose_pattern(waveforms::PatternKind::Peristaltic, cmd, specs);
  const auto res = simulate_transport(limb, make_fluid(1.0), s);
  CHECK(res.regime.wavelength_m == Approx(0.22).epsilon(1e-12));
  CHECK(to_ml_per_min(res.mean_flow_m3_s) == Approx(1.0).epsilon(1e-10));
  CHECK(res.trace.size() == s.num_samples() + 1);
  double integral = 0;
  for (std::size_t i = 0; i + 1 < res.trace.size(); ++i) {
    integral += 0.5 * (res.trace[i + 1].t_s - res.trace[i].t_s) *
                (res.trace[i].flow_m3_s + res.trace[i + 1].flow_m3_s);
  }
  CHECK(res.cumulative_volume_m3 == Approx(integral).epsilon(1e-12));
  // twelve whole periods: one minute at 1 mL/min
  CHECK(res.cumulative_volume_m3 * 1e6 == Approx(1.0).epsilon(1e-6));
  CHECK(res.reynolds ==
        Approx(reynolds_report(make_fluid(1.0), res.mean_flow_m3_s, 3e-3)).epsilon(1e-14));

  cmd.onset_delay_s = 0;
  const auto flat = waveforms::compose_pattern(waveforms::PatternKind::Peristaltic, cmd, specs);
  CHECK(simulate_transport(limb, make_fluid(1.0), flat).mean_flow_m3_s == 0.0);
  CHECK(simulate_transport(limb, make_fluid(1.0), flat).cumulative_volume_m3 == 0.0);
}
