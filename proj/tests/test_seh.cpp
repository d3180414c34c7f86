#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <vector>

#include "peh/harvester.hpp"
#include "peh/seh.hpp"

using namespace peh;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

HarvesterDesign device(double fn) {
  HarvesterDesign h;
  h.name = "t";
  h.natural_frequencies_hz = {fn};
  h.damping_ratios = {0.02};
  const double theta = 4e-9 * (kTwoPi * fn) * (kTwoPi * fn);
  h.modal_coupling = {theta};
  h.output_coupling = {theta};
  h.modal_forcing = {1.0};
  h.piezo_capacitance_f = 100e-9;
  h.load_resistance_ohm = 1e5;
  return h;
}

AccelerationTrace sine_accel(double freq, double amp, double duration, double fs) {
  AccelerationTrace a;
  a.sample_rate = fs;
  const auto n = static_cast<std::size_t>(std::llround(duration * fs));
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = amp * std::sin(kTwoPi * freq * static_cast<double>(i) / fs);
  return a;
}

bool non_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) return false;
  return true;
}

}  // namespace

TEST_CASE("charge_from_source: DC source follows the RC closed form") {
  SEHParams p;
  p.storage_capacitance_f = 1000e-6;
  p.diode_drop_v = 0.3;
  p.diode_on_resistance_ohm = 1.0;
  p.rated_voltage_v = 25.0;
  const double tau = p.diode_on_resistance_ohm * p.storage_capacitance_f;  // 1 ms
  const double v_s = 5.0;

  // 20 samples across five time constants.
  const VoltageTrace vc = charge_from_source(p, [&](double) { return v_s; }, 5.0 * tau,
                                             20.0 / (5.0 * tau));
  REQUIRE(vc.samples.size() == 20);
  const double v_inf = v_s - p.diode_drop_v;
  for (std::size_t i = 0; i < vc.samples.size(); ++i) {
    const double t = static_cast<double>(i) / vc.sample_rate;
    const double want = v_inf * (1.0 - std::exp(-t / tau));
    if (i == 0)
      CHECK(vc.samples[i] == 0.0);
    else
      CHECK(vc.samples[i] == doctest::Approx(want).epsilon(1e-3));
  }
  CHECK(non_decreasing(vc.samples));
}

TEST_CASE("charge_from_source: negative source charges identically (full bridge)") {
  SEHParams p;
  p.storage_capacitance_f = 1000e-6;
  const VoltageTrace pos = charge_from_source(p, [](double) { return 5.0; }, 4e-3, 5000.0);
  const VoltageTrace neg = charge_from_source(p, [](double) { return -5.0; }, 4e-3, 5000.0);
  REQUIRE(pos.samples.size() == neg.samples.size());
  for (std::size_t i = 0; i < pos.samples.size(); ++i)
    CHECK(pos.samples[i] == doctest::Approx(neg.samples[i]).epsilon(1e-9));
}

TEST_CASE("charge_from_source: source below the diode drop never conducts") {
  SEHParams p;
  const VoltageTrace vc = charge_from_source(p, [](double) { return 0.25; }, 1e-3, 10000.0);
  for (double s : vc.samples) CHECK(s == 0.0);
}

TEST_CASE("charge_from_source: nonzero initial voltage relaxes to the same asymptote") {
  SEHParams p;
  p.storage_capacitance_f = 1000e-6;
  const double tau = 1e-3;
  const double v0 = 2.0, v_inf = 4.7;
  const VoltageTrace vc = charge_from_source(p, [](double) { return 5.0; }, 5e-3, 4000.0, v0);
  for (std::size_t i = 1; i < vc.samples.size(); ++i) {
    const double t = static_cast<double>(i) / vc.sample_rate;
    const double want = v_inf + (v0 - v_inf) * std::exp(-t / tau);
    CHECK(vc.samples[i] == doctest::Approx(want).epsilon(1e-3));
  }
}

TEST_CASE("charge_from_source: clamps at the rated voltage") {
  SEHParams p;
  p.storage_capacitance_f = 1000e-6;
  p.rated_voltage_v = 0.5;
  const VoltageTrace vc = charge_from_source(p, [](double) { return 5.0; }, 2e-3, 10000.0);
  CHECK(non_decreasing(vc.samples));
  for (double s : vc.samples) CHECK(s <= p.rated_voltage_v + 1e-12);
  CHECK(vc.samples.back() == doctest::Approx(p.rated_voltage_v).epsilon(1e-6));
}

TEST_CASE("charge_from_source: argument validation") {
  SEHParams p;
  CHECK_THROWS_AS(charge_from_source(p, [](double) { return 1.0; }, 0.0, 100.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(charge_from_source(p, [](double) { return 1.0; }, 1.0, 100.0, -0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(charge_from_source(p, [](double) { return 1.0; }, 1.0, 100.0, 26.0),
                  std::invalid_argument);
}

TEST_CASE("SEHParams validation") {
  SEHParams p;
  CHECK_NOTHROW(p.validate());
  p.storage_capacitance_f = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SEHParams{};
  p.diode_drop_v = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SEHParams{};
  p.diode_on_resistance_ohm = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SEHParams{};
  p.rated_voltage_v = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("simulate_seh: zero input leaves the capacitor empty") {
  AccelerationTrace a;
  a.sample_rate = 12000.0;
  a.samples.assign(1200, 0.0);
  const SehRunResult r = simulate_seh(device(100.0), SEHParams{}, a);
  REQUIRE(r.capacitor_voltage.samples.size() == a.samples.size());
  for (double s : r.capacitor_voltage.samples) CHECK(s == 0.0);
  CHECK_FALSE(r.saturated);
}

TEST_CASE("simulate_seh: piezo voltage below the diode drop never charges") {
  // ~0.05 V/(m/s^2) response peak stays far under the 0.3 V drop, even with
  // the startup transient.
  const AccelerationTrace a = sine_accel(100.0, 0.05, 0.1, 12000.0);
  const SehRunResult r = simulate_seh(device(100.0), SEHParams{}, a);
  for (double s : r.capacitor_voltage.samples) CHECK(s == 0.0);
}

TEST_CASE("simulate_seh: resonant drive charges monotonically below saturation") {
  const AccelerationTrace a = sine_accel(100.0, 2.0, 0.2, 12000.0);
  const SehRunResult r = simulate_seh(device(100.0), SEHParams{}, a);
  CHECK(non_decreasing(r.capacitor_voltage.samples));
  CHECK(r.capacitor_voltage.samples.back() > 0.0);
  CHECK_FALSE(r.saturated);
  CHECK(r.final_state.x.size() == 3);
  CHECK(r.final_state.time == doctest::Approx(0.2));
  CHECK(r.final_state.capacitor_voltage >=
        r.capacitor_voltage.samples.back() - 1e-9);
}

TEST_CASE("simulate_seh: saturation clamps and records the first clamp time") {
  SEHParams p;
  p.storage_capacitance_f = 1e-6;
  p.rated_voltage_v = 0.5;
  const AccelerationTrace a = sine_accel(100.0, 5.0, 0.1, 12000.0);
  const SehRunResult r = simulate_seh(device(100.0), p, a);
  CHECK(r.saturated);
  CHECK(r.saturation_time > 0.0);
  CHECK(r.saturation_time <= 0.1);
  for (double s : r.capacitor_voltage.samples) CHECK(s <= p.rated_voltage_v + 1e-12);
  CHECK(r.capacitor_voltage.samples.back() == doctest::Approx(p.rated_voltage_v).epsilon(1e-9));
  CHECK(r.final_state.capacitor_voltage == doctest::Approx(p.rated_voltage_v).epsilon(1e-12));
}

TEST_CASE("simulate_seh: accepts a stored state and continues from it") {
  const AccelerationTrace a = sine_accel(100.0, 2.0, 0.1, 12000.0);
  const HarvesterDesign h = device(100.0);
  const SehRunResult first = simulate_seh(h, SEHParams{}, a);
  const SehRunResult second = simulate_seh(h, SEHParams{}, a, &first.final_state);
  CHECK(second.capacitor_voltage.samples.front() >=
        first.final_state.capacitor_voltage - 1e-12);
  CHECK(second.final_state.capacitor_voltage > first.final_state.capacitor_voltage);

  CircuitState bad;
  bad.x = {0.0, 0.0};  // wrong length (needs 2K+1 = 3)
  CHECK_THROWS_AS(simulate_seh(h, SEHParams{}, a, &bad), std::invalid_argument);
  bad.x = {0.0, 0.0, 0.0};
  bad.capacitor_voltage = 26.0;
  CHECK_THROWS_AS(simulate_seh(h, SEHParams{}, a, &bad), std::invalid_argument);
}

TEST_CASE("capacitor_energy: quadratic form and validation") {
  CHECK(capacitor_energy(25.0, 10e-6) == doctest::Approx(3.125e-3).epsilon(1e-12));
  CHECK(capacitor_energy(0.0, 10e-6) == 0.0);
  CHECK_THROWS_AS(capacitor_energy(-1.0, 10e-6), std::invalid_argument);
  CHECK_THROWS_AS(capacitor_energy(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("energy_at_times: nearest-sample lookup with range checks") {
  VoltageTrace vc;
  vc.sample_rate = 10.0;
  vc.samples = {0.0, 1.0, 2.0, 3.0};  // duration n*dt = 0.4 s
  const std::vector<double> times = {0.0, 0.1, 0.3, 0.4};
  const std::vector<double> e = energy_at_times(vc, 2.0, times);
  REQUIRE(e.size() == 4);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == doctest::Approx(1.0));
  CHECK(e[2] == doctest::Approx(9.0));
  CHECK(e[3] == doctest::Approx(9.0));  // trailing edge clamps to the last sample

  const std::vector<double> late = {0.45};
  CHECK_THROWS_AS(energy_at_times(vc, 2.0, late), std::invalid_argument);
  const std::vector<double> early = {-0.01};
  CHECK_THROWS_AS(energy_at_times(vc, 2.0, early), std::invalid_argument);
}

TEST_CASE("energy_at_times on a monotone charge curve is monotone") {
  SEHParams p;
  p.storage_capacitance_f = 1000e-6;
  const VoltageTrace vc = charge_from_source(p, [](double) { return 5.0; }, 5e-3, 4000.0);
  const std::vector<double> times = {0.0, 1e-3, 2e-3, 3e-3, 4e-3};
  const std::vector<double> e = energy_at_times(vc, p.storage_capacitance_f, times);
  CHECK(non_decreasing(e));
}

TEST_CASE("linear_window is half the equivalent RC constant") {
  SEHParams p;  // 10 uF
  CHECK(linear_window(p, 1000.0) == doctest::Approx(5e-3).epsilon(1e-12));
  CHECK_THROWS_AS(linear_window(p, 0.0), std::invalid_argument);
}
