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

#include "peristalsim/transport.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "peristalsim/errors.hpp"

namespace peristalsim::transport {

namespace {

constexpr double kGlycerinDensity = 1260.0;
constexpr double kWaterDensity = 998.0;

void check_mixture(double cm, double t) {
  if (!(cm >= 0.0 && cm <= 1.0)) {
    throw DomainError("glycerin mass fraction must lie in [0, 1]");
  }
  if (!(t >= 0.0 && t <= 100.0)) {
    throw DomainError("temperature must lie in [0, 100] degC");
  }
}

void check_geometry(double a, double b) {
  if (!(a > 0)) throw DomainError("vein radius must be positive");
  if (!(b >= 0)) throw DomainError("occlusion amplitude must be non-negative");
  if (b > a) throw DomainError("occlusion amplitude exceeds vein radius");
}

// Composite Simpson over [0, length] with an even number of intervals.
template <typename F>
double simpson(F&& f, double length, std::size_t intervals) {
  const double h = length / static_cast<double>(intervals);
  double sum = f(0.0) + f(length);
  for (std::size_t i = 1; i < intervals; ++i) {
    sum += (i % 2 == 1 ? 4.0 : 2.0) * f(h * static_cast<double>(i));
  }
  return sum * h / 3.0;
}

}  // namespace

void LimbModel::validate() const {
  if (!(vein_mean_radius_m > 0)) throw ConfigError("limb vein radius must be positive");
  if (!(occlusion_amplitude_m >= 0 && occlusion_amplitude_m <= vein_mean_radius_m)) {
    throw ConfigError("limb occlusion amplitude must lie in [0, vein radius]");
  }
  if (!(actuator_pitch_m > 0)) throw ConfigError("limb actuator pitch must be positive");
  if (!(actuation_length_m > 0)) throw ConfigError("limb actuation length must be positive");
  if (!(lambda_crit_m > 0)) throw ConfigError("limb lambda_crit must be positive");
  if (!(rest_radius_m > 0)) throw ConfigError("limb rest radius must be positive");
  if (!(compliance_m_per_m3 >= 0)) throw ConfigError("limb compliance must be non-negative");
}

double cheng_viscosity(double cm, double t) {
  check_mixture(cm, t);
  // component viscosities in cP
  const double mu_w = 1.790 * std::exp((-1230.0 - t) * t / (36100.0 + 360.0 * t));
  const double mu_g = 12100.0 * std::exp((-1233.0 + t) * t / (9900.0 + 70.0 * t));
  const double a = 0.705 - 0.0017 * t;
  const double b = (4.9 + 0.036 * t) * std::pow(a, 2.5);
  const double alpha = 1.0 - cm + (a * b * cm * (1.0 - cm)) / (a * cm + b * (1.0 - cm));
  return std::pow(mu_w, alpha) * std::pow(mu_g, 1.0 - alpha) * 1e-3;
}

double mixture_density(double cm, double t) {
  check_mixture(cm, t);
  return 1.0 / (cm / kGlycerinDensity + (1.0 - cm) / kWaterDensity);
}

FluidSpec make_fluid(double cm, double t) {
  return {cm, t, mixture_density(cm, t), cheng_viscosity(cm, t)};
}

double mean_flow_from_speed(double a, double b, double c) {
  check_geometry(a, b);
  if (!(c >= 0)) throw DomainError("wave speed must be non-negative");
  const double a2 = a * a;
  const double b2 = b * b;
  if (b2 == 0.0) return 0.0;
  return M_PI * c * b2 / 2.0 * (16.0 * a2 - b2) / (2.0 * a2 + 3.0 * b2);
}

double mean_flow_from_wavelength(double a, double b, double wavelength, double frequency) {
  if (!(wavelength > 0 && frequency > 0)) {
    throw DomainError("wavelength and frequency must be positive");
  }
  return mean_flow_from_speed(a, b, wavelength * frequency);
}

OracleReport lubrication_oracle_report(double a, double b, double wavelength,
                                       double frequency, double mu,
                                       const OracleOptions& options) {
  check_geometry(a, b);
  if (!(b < a)) throw DomainError("oracle needs a partially open vein (b < a)");
  if (!(wavelength > 0 && frequency > 0 && mu > 0)) {
    throw DomainError("oracle needs positive wavelength, frequency and viscosity");
  }
  const double c = wavelength * frequency;
  const double k = 2.0 * M_PI / wavelength;
  const auto radius = [&](double xi) { return a + b * std::sin(k * xi); };

  // Wave frame: the wall is fixed and moves at -c. For wave-frame flow q,
  // Poiseuille flow through radius h gives dp/dxi = -8 mu (q + pi c h^2) / (pi h^4).
  const auto pressure_rise = [&](double q, std::size_t n) {
    return simpson(
        [&](double xi) {
          const double h = radius(xi);
          const double h2 = h * h;
          return -8.0 * mu * (q + M_PI * c * h2) / (M_PI * h2 * h2);
        },
        wavelength, n);
  };

  const double q_lo = -M_PI * c * (a + b) * (a + b);  // rise >= 0 here
  const double q_hi = -M_PI * c * (a - b) * (a - b);  // rise <= 0 here

  const auto solve = [&](std::size_t n, std::uintmax_t& iterations) {
    const auto f = [&](double q) { return pressure_rise(q, n); };
    const double f_lo = f(q_lo);
    const double f_hi = f(q_hi);
    if (f_lo == 0.0) return q_lo;
    if (f_hi == 0.0) return q_hi;
    std::uintmax_t max_iter = 200;
    const auto tol = [&](double x, double y) {
      return std::abs(x - y) <= options.root_tolerance * std::max(std::abs(x), std::abs(y));
    };
    auto [lo, hi] = boost::math::tools::toms748_solve(f, q_lo, q_hi, f_lo, f_hi, tol, max_iter);
    iterations = max_iter;
    return 0.5 * (lo + hi);
  };

  const auto mean_square_radius = [&](std::size_t n) {
    return simpson([&](double xi) { return radius(xi) * radius(xi); }, wavelength, n) /
           wavelength;
  };

  std::size_t n = options.initial_stations + (options.initial_stations % 2);
  std::uintmax_t iters = 0;
  double q = solve(n, iters);
  double prev = q + M_PI * c * mean_square_radius(n);
  while (true) {
    const std::size_t next = 2 * n;
    if (next > options.max_stations) {
      std::ostringstream msg;
      msg << "lubrication oracle did not converge: b/a = " << b / a << ", stations = " << n
          << ", last estimate = " << prev << " m^3/s";
      throw NumericError(msg.str());
    }
    const double q_next = solve(next, iters);
    const double flow = q_next + M_PI * c * mean_square_radius(next);
    // the flow is a small difference of two large terms; below the root
    // solver's resolution on q there is nothing left to converge
    const double floor = options.root_tolerance * std::abs(q_next);
    const bool settled =
        std::abs(flow - prev) <= options.quadrature_tolerance * std::abs(flow) + floor;
    n = next;
    q = q_next;
    prev = flow;
    if (settled) break;
  }
  return {prev, q, n, static_cast<std::size_t>(iters)};
}

double lubrication_oracle(double a, double b, double wavelength, double frequency,
                          double mu, const OracleOptions& options) {
  return lubrication_oracle_report(a, b, wavelength, frequency, mu, options).mean_flow_m3_s;
}

double reynolds_report(const FluidSpec& fluid, double mean_flow, double a) {
  if (!(a > 0)) throw DomainError("vein radius must be positive");
  const double velocity = mean_flow / (M_PI * a * a);
  return fluid.density_kg_m3 * velocity * 2.0 * a / fluid.viscosity_pa_s;
}

double table_reynolds(const FluidSpec& fluid) {
  return fluid.density_kg_m3 * kTableVelocityDiameter_m2_s / fluid.viscosity_pa_s;
}

double calibrate_occlusion(double a, double wavelength, double frequency, double target) {
  const double c = wavelength * frequency;
  const double full = mean_flow_from_speed(a, a, c);
  if (!(target > 0 && target < full)) {
    throw DomainError("target flow not reachable with 0 < b < a");
  }
  const auto f = [&](double b) { return mean_flow_from_speed(a, b, c) - target; };
  std::uintmax_t max_iter = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(
      f, 0.0, a, boost::math::tools::eps_tolerance<double>(50), max_iter);
  return 0.5 * (lo + hi);
}

Regime make_regime(const LimbModel& limb, double frequency, double onset_delay,
                   double volume_amplitude, double direction) {
  Regime r;
  r.frequency_hz = frequency;
  r.wavelength_m = waveforms::wavelength_from_delay(limb.actuator_pitch_m, frequency,
                                                    onset_delay);
  r.occlusion_m = std::min(limb.vein_mean_radius_m,
                           waveforms::radial_amplitude(limb.compliance_m_per_m3,
                                                       volume_amplitude));
  r.direction = direction < 0 ? -1.0 : 1.0;
  return r;
}

Regime regime_from_schedule(const LimbModel& limb, const waveforms::PatternSchedule& s) {
  using waveforms::PatternKind;
  const double n = static_cast<double>(s.command.num_actuators);
  if (s.kind == PatternKind::SequentialSqueeze) {
    // a squeeze pulse hops one pitch per squeeze time
    const double ts = s.options.squeeze_time_s;
    const double dir =
        s.command.direction == waveforms::Direction::DistalToProximal ? 1.0 : -1.0;
    Regime r = make_regime(limb, 1.0 / (n * ts), ts, s.volume_amplitude_m3, dir);
    return r;
  }
  return regime_from_lags(limb, s.actuator_lag_s, s.frequency_hz, s.volume_amplitude_m3);
}

Regime regime_from_lags(const LimbModel& limb, std::span<const double> lags,
                        double frequency, double volume_amplitude) {
  const double period = 1.0 / frequency;
  double step = 0.0;
  for (std::size_t i = 0; i + 1 < lags.size(); ++i) {
    double d = std::fmod(lags[i + 1] - lags[i], period);
    if (d > 0.5 * period) d -= period;
    if (d <= -0.5 * period) d += period;
    step += d;
  }
  if (lags.size() > 1) step /= static_cast<double>(lags.size() - 1);
  // sub-nanosecond residue from the wrap arithmetic is an in-phase drive
  if (std::abs(step) < 1e-12 * period) step = 0.0;
  return make_regime(limb, frequency, std::abs(step), volume_amplitude, step < 0 ? -1.0 : 1.0);
}

double regime_mean_flow(const LimbModel& limb, const Regime& r) {
  if (std::isinf(r.wavelength_m) || r.occlusion_m == 0.0) return 0.0;
  const double a = limb.vein_mean_radius_m;
  if (r.wavelength_m <= limb.lambda_crit_m) {
    return r.direction * mean_flow_from_wavelength(a, r.occlusion_m, r.wavelength_m,
                                                   r.frequency_hz);
  }
  const double at_crit =
      mean_flow_from_wavelength(a, r.occlusion_m, limb.lambda_crit_m, r.frequency_hz);
  return r.direction * at_crit * (limb.lambda_crit_m / r.wavelength_m);
}

double instantaneous_flow(const LimbModel& limb, const Regime& r, double t) {
  const double mean = regime_mean_flow(limb, r);
  if (mean == 0.0) return 0.0;
  const double a = limb.vein_mean_radius_m;
  const double b = r.occlusion_m;
  const double c = r.wavelength_m * r.frequency_hz;
  const double raw = r.direction * mean_flow_from_speed(a, b, c);
  // pulsatile part scales with the same boundary correction as the mean
  const double scale = mean / raw;
  const double h = a + b * std::sin(2.0 * M_PI * r.frequency_hz * t);
  return mean + scale * r.direction * c * M_PI * (h * h - (a * a + 0.5 * b * b));
}

TransportResult simulate_transport(const LimbModel& limb, const FluidSpec& fluid,
                                   const waveforms::PatternSchedule& schedule) {
  if (schedule.num_samples() == 0) {
    throw ValidationError("schedule has no samples");
  }
  TransportResult out;
  out.regime = regime_from_schedule(limb, schedule);
  out.mean_flow_m3_s = regime_mean_flow(limb, out.regime);
  out.reynolds =
      reynolds_report(fluid, std::abs(out.mean_flow_m3_s), limb.vein_mean_radius_m);

  const double dt = schedule.sample_period_s();
  const std::size_t n = schedule.num_samples();
  out.trace.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * dt;
    out.trace.push_back({t, instantaneous_flow(limb, out.regime, t)});
  }
  double volume = 0.0;
  for (std::size_t i = 0; i + 1 < out.trace.size(); ++i) {
    volume += 0.5 * dt * (out.trace[i].flow_m3_s + out.trace[i + 1].flow_m3_s);
  }
  out.cumulative_volume_m3 = volume;
  return out;
}

}  // namespace peristalsim::transport
