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

#include "peristalsim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

#include "peristalsim/errors.hpp"

namespace peristalsim::optimizer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Relative slack on constraint checks; boundary points reached by
// inverting a constraint must stay feasible after rounding.
constexpr double kConstraintSlack = 1e-12;
// Relative distance at which a constraint is reported as active.
constexpr double kActiveBand = 1e-3;
constexpr double kFrequencyTolerance = 1e-4;
constexpr double kDelayTolerance = 1e-9;
// Samples per grid cell before edge bisection and polishing.
constexpr int kFrequencySplit = 8;
constexpr int kDelaySplit = 4;

double objective(const Evaluation& e) { return e.feasible() ? e.mean_flow_m3_s : kNegInf; }

// Golden-section search for the maximiser of fn on [lo, hi]. Infeasible
// points report -inf, which pushes the bracket towards the feasible side.
double golden_max(const std::function<double(double)>& fn, double lo, double hi,
                  double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = fn(x1);
  double f2 = fn(x2);
  while (b - a > tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = fn(x2);
    }
  }
  return f1 >= f2 ? x1 : x2;
}

// Bisects between a feasible and an infeasible abscissa down to tol and
// returns the feasible end.
template <class Fn>
double feasible_edge(const Fn& at, double inside, double outside, double tol) {
  while (std::abs(outside - inside) > tol) {
    const double m = 0.5 * (inside + outside);
    (at(m).feasible() ? inside : outside) = m;
  }
  return inside;
}

// Multi-start maximisation of at(x) over the span of `knots`. Each knot
// cell is split into `split` samples; every feasibility edge between
// samples is bisected and every sampled local maximum is polished by
// golden-section search. Wave aliasing makes the flow a saw-tooth in both
// frequency and delay, with its peaks sitting on wavelength-limit edges, so
// a single local search is not enough.
template <class Fn>
Evaluation refine_axis(const Fn& at, const std::vector<double>& knots, int split, double tol) {
  std::vector<double> xs;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    for (int k = 0; k < split; ++k) {
      xs.push_back(knots[i] + (knots[i + 1] - knots[i]) * k / split);
    }
  }
  xs.push_back(knots.back());
  std::vector<Evaluation> es;
  es.reserve(xs.size());
  for (double x : xs) es.push_back(at(x));

  Evaluation best = es.front();
  const auto offer = [&](const Evaluation& e) {
    if (better(e, best)) best = e;
  };
  for (const auto& e : es) offer(e);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const bool a = es[i].feasible();
    if (a != es[i + 1].feasible()) {
      offer(at(a ? feasible_edge(at, xs[i], xs[i + 1], tol)
                 : feasible_edge(at, xs[i + 1], xs[i], tol)));
    }
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!es[i].feasible()) continue;
    const double q = es[i].mean_flow_m3_s;
    const bool left = i == 0 || objective(es[i - 1]) <= q;
    const bool right = i + 1 == xs.size() || objective(es[i + 1]) <= q;
    if (!(left && right)) continue;
    const double lo = xs[i == 0 ? 0 : i - 1];
    const double hi = xs[std::min(i + 1, xs.size() - 1)];
    offer(at(golden_max([&](double x) { return objective(at(x)); }, lo, hi, tol)));
  }
  return best;
}

}  // namespace

std::vector<double> Axis::grid() const {
  if (!continuous) return values;
  if (grid_points <= 1 || lo == hi) return {lo};
  std::vector<double> out(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
  }
  return out;
}

void Axis::validate(const char* name) const {
  if (continuous) {
    if (!(lo <= hi)) throw ValidationError(std::string(name) + " interval is empty");
    if (grid_points == 0) throw ValidationError(std::string(name) + " needs grid points");
  } else if (values.empty()) {
    throw ValidationError(std::string(name) + " grid is empty");
  }
}

std::vector<double> default_delay_grid() {
  std::vector<double> out;
  for (int ms = 0; ms <= 1125; ms += 125) out.push_back(ms * 1e-3);
  return out;
}

bool better(const Evaluation& a, const Evaluation& b) {
  const double qa = objective(a);
  const double qb = objective(b);
  if (qa != qb) return qa > qb;
  const auto& pa = a.point;
  const auto& pb = b.point;
  if (pa.frequency_hz != pb.frequency_hz) return pa.frequency_hz < pb.frequency_hz;
  if (pa.onset_delay_s != pb.onset_delay_s) return pa.onset_delay_s > pb.onset_delay_s;
  return pa.amplitude_fraction < pb.amplitude_fraction;
}

Evaluation evaluate_regime(const transport::LimbModel& limb, const DeviceSpecs& specs,
                           const RegimeConstraints& constraints, const RegimePoint& point) {
  const auto& crank = specs.crank;
  const auto& manifold = specs.manifold;
  if (!(point.amplitude_fraction > 0 && point.amplitude_fraction <= 1.0)) {
    throw ValidationError("amplitude fraction must lie in (0, 1]");
  }
  if (!(point.frequency_hz > 0)) throw ValidationError("frequency must be positive");
  if (!(point.onset_delay_s >= 0)) throw ValidationError("onset delay must be non-negative");

  Evaluation e{};
  e.point = point;
  const double amp = point.amplitude_fraction * crank.half_range_rad();

  e.max_frequency_hz = drivetrain::max_frequency(crank, point.amplitude_fraction);
  e.frequency_ok = point.frequency_hz <= e.max_frequency_hz * (1 + kConstraintSlack);

  waveforms::WaveCommand cmd;
  cmd.amplitude_rad = amp;
  cmd.frequency_hz = point.frequency_hz;
  cmd.onset_delay_s = point.onset_delay_s;
  cmd.num_actuators = manifold.num_motors();
  const auto lags = waveforms::actuator_lags(cmd, manifold, point.frequency_hz);
  const auto regime = transport::regime_from_lags(
      limb, lags, point.frequency_hz, waveforms::sinusoid_volume_amplitude(specs, amp));
  e.wavelength_m = regime.wavelength_m;
  e.wavelength_ok = e.wavelength_m <= constraints.lambda_max_m * (1 + kConstraintSlack);
  e.mean_flow_m3_s = transport::regime_mean_flow(limb, regime);

  // lowest routed volume over the cycle sets the peak skin pressure
  const double mid = crank.alpha_mid_rad();
  double peak = 0.0;
  for (std::size_t m = 0; m < manifold.num_motors(); ++m) {
    const auto low = drivetrain::chamber_volumes(crank, mid - amp);
    const auto high = drivetrain::chamber_volumes(crank, mid + amp);
    if (const auto n = manifold.port_load(m, drivetrain::Chamber::A); n > 0) {
      peak = std::max(peak, actuator::pressure_from_volume(
                                specs.actuator, low.a_m3 / static_cast<double>(n)));
    }
    if (const auto n = manifold.port_load(m, drivetrain::Chamber::B); n > 0) {
      peak = std::max(peak, actuator::pressure_from_volume(
                                specs.actuator, high.b_m3 / static_cast<double>(n)));
    }
  }
  e.peak_pressure_pa = peak;
  e.pressure_ok = peak <= constraints.pressure_cap_pa * (1 + kConstraintSlack);
  return e;
}

RegimeResult optimize_regime(const transport::LimbModel& limb,
                             const transport::FluidSpec& fluid, const DeviceSpecs& specs,
                             const RegimeConstraints& constraints) {
  constraints.frequency_hz.validate("frequency");
  constraints.onset_delay_s.validate("onset delay");
  constraints.amplitude_fraction.validate("amplitude");
  if (!(constraints.lambda_max_m > 0)) throw ValidationError("lambda_max must be positive");
  if (!(constraints.pressure_cap_pa > 0)) throw ValidationError("pressure cap must be positive");

  const auto eval = [&](double f, double dt, double amp) {
    return evaluate_regime(limb, specs, constraints, {f, dt, amp});
  };

  // Best onset delay for a fixed (f, amp) when the delay axis is continuous.
  const auto delay_knots = constraints.onset_delay_s.grid();
  const auto profile_delay = [&](double f, double amp) {
    if (delay_knots.size() == 1) return eval(f, delay_knots.front(), amp);
    return refine_axis([&](double dt) { return eval(f, dt, amp); }, delay_knots,
                       kDelaySplit, kDelayTolerance);
  };

  RegimeResult result;
  const auto fgrid = constraints.frequency_hz.grid();
  const auto agrid = constraints.amplitude_fraction.grid();
  const bool delay_continuous = constraints.onset_delay_s.continuous;
  const auto dgrid = constraints.onset_delay_s.grid();

  for (double f : fgrid) {
    for (double amp : agrid) {
      if (delay_continuous) {
        result.grid.push_back(profile_delay(f, amp));
      } else {
        for (double dt : dgrid) result.grid.push_back(eval(f, dt, amp));
      }
    }
  }

  const Evaluation* incumbent = nullptr;
  for (const auto& e : result.grid) {
    if (!e.feasible()) continue;
    if (incumbent == nullptr || better(e, *incumbent)) incumbent = &e;
  }
  if (incumbent == nullptr) {
    std::size_t freq = 0, wave = 0, pressure = 0;
    for (const auto& e : result.grid) {
      freq += e.frequency_ok ? 0 : 1;
      wave += e.wavelength_ok ? 0 : 1;
      pressure += e.pressure_ok ? 0 : 1;
    }
    std::ostringstream msg;
    msg << "no feasible driving regime among " << result.grid.size() << " grid points;";
    if (freq) msg << " servo frequency limit rejects " << freq << ";";
    if (wave) msg << " wavelength limit rejects " << wave << ";";
    if (pressure) msg << " pressure cap rejects " << pressure << ";";
    throw InfeasibleError(msg.str());
  }
  Evaluation best = *incumbent;

  if (constraints.frequency_hz.continuous && fgrid.size() > 1) {
    const auto polish = [&](auto&& at) {
      const auto e = refine_axis(at, fgrid, kFrequencySplit, kFrequencyTolerance);
      if (e.feasible() && better(e, best)) best = e;
    };
    for (double amp : agrid) {
      if (delay_continuous) {
        polish([&](double f) { return profile_delay(f, amp); });
      } else {
        for (double dt : dgrid) polish([&](double f) { return eval(f, dt, amp); });
      }
    }
  }

  result.best = best;
  result.reynolds = transport::reynolds_report(fluid, std::abs(best.mean_flow_m3_s),
                                               limb.vein_mean_radius_m);
  const auto near = [](double value, double limit) {
    return value >= limit * (1 - kActiveBand);
  };
  if (near(best.point.frequency_hz, best.max_frequency_hz)) {
    result.active_constraints.push_back("servo_frequency");
  }
  if (near(best.wavelength_m, constraints.lambda_max_m)) {
    result.active_constraints.push_back("wavelength");
  }
  if (near(best.peak_pressure_pa, constraints.pressure_cap_pa)) {
    result.active_constraints.push_back("pressure_cap");
  }
  return result;
}

}  // namespace peristalsim::optimizer
