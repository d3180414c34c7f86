#include "peh/seh.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "peh/ode.hpp"

namespace peh {

void SEHParams::validate() const {
  if (!(storage_capacitance_f > 0.0))
    throw std::invalid_argument("SEHParams: storage capacitance must be > 0");
  if (!(diode_drop_v >= 0.0)) throw std::invalid_argument("SEHParams: diode drop must be >= 0");
  if (!(diode_on_resistance_ohm > 0.0))
    throw std::invalid_argument("SEHParams: diode on-resistance must be > 0");
  if (!(rated_voltage_v > 0.0)) throw std::invalid_argument("SEHParams: rated voltage must be > 0");
}

double capacitor_energy(double v_c, double capacitance_f) {
  if (v_c < 0.0) throw std::invalid_argument("capacitor_energy: negative capacitor voltage");
  if (!(capacitance_f > 0.0)) throw std::invalid_argument("capacitor_energy: capacitance must be > 0");
  return 0.5 * capacitance_f * v_c * v_c;
}

std::vector<double> energy_at_times(const VoltageTrace& capacitor_voltage, double capacitance_f,
                                    std::span<const double> times_s) {
  capacitor_voltage.validate();
  const double duration = capacitor_voltage.duration();
  std::vector<double> out;
  out.reserve(times_s.size());
  for (double t : times_s) {
    if (t < 0.0 || t > duration)
      throw std::invalid_argument("energy_at_times: time out of range [0, duration]");
    auto idx = static_cast<std::size_t>(std::llround(t * capacitor_voltage.sample_rate));
    if (idx >= capacitor_voltage.samples.size()) idx = capacitor_voltage.samples.size() - 1;
    out.push_back(capacitor_energy(capacitor_voltage.samples[idx], capacitance_f));
  }
  return out;
}

double linear_window(const SEHParams& params, double equivalent_resistance_ohm) {
  params.validate();
  if (!(equivalent_resistance_ohm > 0.0))
    throw std::invalid_argument("linear_window: equivalent resistance must be > 0");
  return 0.5 * equivalent_resistance_ohm * params.storage_capacitance_f;
}

SehRunResult simulate_seh(const HarvesterDesign& design, const SEHParams& params,
                          const AccelerationTrace& trace, const CircuitState* x0) {
  params.validate();
  trace.validate();
  StateSpaceSystem sys = assemble_state_space(design);
  const auto nmech = static_cast<std::size_t>(sys.A.rows());  // 2K+1
  // Switch open: no load resistor on the piezo node.
  sys.A(static_cast<Eigen::Index>(nmech) - 1, static_cast<Eigen::Index>(nmech) - 1) = 0.0;

  const std::size_t n = nmech + 1;  // + capacitor voltage
  std::vector<double> y(n, 0.0);
  if (x0) {
    if (x0->x.size() != nmech)
      throw std::invalid_argument("simulate_seh: x0.x must have length 2K+1");
    if (x0->capacitor_voltage < 0.0 || x0->capacitor_voltage > params.rated_voltage_v)
      throw std::invalid_argument("simulate_seh: x0 capacitor voltage outside [0, rated]");
    std::copy(x0->x.begin(), x0->x.end(), y.begin());
    y[nmech] = x0->capacitor_voltage;
  }

  const double dt = trace.dt();
  const std::size_t ns = trace.samples.size();
  std::vector<double> times(ns);
  for (std::size_t i = 0; i < ns; ++i) times[i] = static_cast<double>(i) * dt;

  LinearInterpolant accel(trace.samples, trace.sample_rate);
  const Eigen::MatrixXd& A = sys.A;
  const Eigen::MatrixXd& B = sys.B;
  const double inv_c = 1.0 / params.storage_capacitance_f;
  const double inv_ron = 1.0 / params.diode_on_resistance_ohm;

  auto rhs = [&](double t, const std::vector<double>& x, std::vector<double>& dx) {
    const double a = accel(t);
    const double v = x[nmech - 1];
    const double v_c = x[nmech];
    const double headroom = std::abs(v) - params.diode_drop_v - v_c;
    const double i_l = headroom > 0.0 ? headroom * inv_ron : 0.0;
    assert(i_l >= 0.0);
    assert(!(std::abs(v) <= v_c + params.diode_drop_v) || i_l == 0.0);  // blocking correctness
    const double i_bridge = (v >= 0.0 ? i_l : -i_l);
    for (std::size_t r = 0; r < nmech; ++r) {
      double acc = B(static_cast<Eigen::Index>(r), 0) * a -
                   B(static_cast<Eigen::Index>(r), 1) * i_bridge;
      for (std::size_t c = 0; c < nmech; ++c)
        acc += A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * x[c];
      dx[r] = acc;
    }
    dx[nmech] = i_l * inv_c;
  };

  OdeOptions opt;
  opt.max_step = 0.5 * dt;

  SehRunResult result;
  result.capacitor_voltage.sample_rate = trace.sample_rate;
  result.capacitor_voltage.samples.assign(ns, 0.0);

  bool saturated = false;
  double saturation_time = 0.0;
  auto post_step = [&](double t, std::vector<double>& x) {
    if (x[nmech] > params.rated_voltage_v) {
      if (!saturated) {
        saturated = true;
        saturation_time = t;
      }
      x[nmech] = params.rated_voltage_v;
      return true;
    }
    return false;
  };

  // The continuous model has dv_c/dt >= 0, so the sampled trajectory is
  // projected onto {non-decreasing, <= rated} to keep the interpolant's
  // O(tol) wiggle from breaking that structural guarantee.
  double prev = y[nmech];
  auto sink = [&](std::size_t i, double, const std::vector<double>& x) {
    double v_c = std::min(x[nmech], params.rated_voltage_v);
    v_c = std::max(v_c, prev);
    prev = v_c;
    result.capacitor_voltage.samples[i] = v_c;
  };

  std::vector<double> y_final = integrate_sampled(rhs, std::move(y), 0.0,
                                                  static_cast<double>(ns) * dt, times, opt, sink,
                                                  post_step);
  result.final_state.x.assign(y_final.begin(), y_final.begin() + static_cast<std::ptrdiff_t>(nmech));
  result.final_state.capacitor_voltage = std::min(y_final[nmech], params.rated_voltage_v);
  result.final_state.time = static_cast<double>(ns) * dt;
  result.saturated = saturated;
  result.saturation_time = saturation_time;
  return result;
}

VoltageTrace charge_from_source(const SEHParams& params,
                                const std::function<double(double)>& source_voltage,
                                double duration_s, double sample_rate_hz,
                                double initial_capacitor_voltage) {
  params.validate();
  if (!(duration_s > 0.0) || !(sample_rate_hz > 0.0))
    throw std::invalid_argument("charge_from_source: duration and sample rate must be > 0");
  if (initial_capacitor_voltage < 0.0 || initial_capacitor_voltage > params.rated_voltage_v)
    throw std::invalid_argument("charge_from_source: initial voltage outside [0, rated]");

  const double dt = 1.0 / sample_rate_hz;
  const auto ns = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  if (ns == 0) throw std::invalid_argument("charge_from_source: zero-length run");
  std::vector<double> times(ns);
  for (std::size_t i = 0; i < ns; ++i) times[i] = static_cast<double>(i) * dt;

  const double inv_c = 1.0 / params.storage_capacitance_f;
  const double inv_ron = 1.0 / params.diode_on_resistance_ohm;
  auto rhs = [&](double t, const std::vector<double>& x, std::vector<double>& dx) {
    const double headroom = std::abs(source_voltage(t)) - params.diode_drop_v - x[0];
    dx[0] = (headroom > 0.0 ? headroom * inv_ron : 0.0) * inv_c;
  };

  OdeOptions opt;
  opt.max_step = 0.5 * dt;

  VoltageTrace out;
  out.sample_rate = sample_rate_hz;
  out.samples.assign(ns, 0.0);
  double prev = initial_capacitor_voltage;
  auto sink = [&](std::size_t i, double, const std::vector<double>& x) {
    double v_c = std::min(x[0], params.rated_voltage_v);
    v_c = std::max(v_c, prev);
    prev = v_c;
    out.samples[i] = v_c;
  };
  auto post_step = [&](double, std::vector<double>& x) {
    if (x[0] > params.rated_voltage_v) {
      x[0] = params.rated_voltage_v;
      return true;
    }
    return false;
  };
  integrate_sampled(rhs, std::vector<double>{initial_capacitor_voltage}, 0.0,
                    static_cast<double>(ns) * dt, times, opt, sink, post_step);
  return out;
}

}  // namespace peh
