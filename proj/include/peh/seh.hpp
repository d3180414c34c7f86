#pragma once

#include <functional>
#include <span>
#include <vector>

#include "peh/harvester.hpp"
#include "peh/trace.hpp"

namespace peh {

// Standard energy-harvesting circuit: full-bridge rectifier feeding a storage
// capacitor, load switch open (no discharge path).
struct SEHParams {
  double storage_capacitance_f = 10e-6;
  double diode_drop_v = 0.3;
  double diode_on_resistance_ohm = 1.0;
  double rated_voltage_v = 25.0;

  void validate() const;  // throws std::invalid_argument
};

struct CircuitState {
  std::vector<double> x;         // {eta, eta_dot, v}, length 2K+1
  double capacitor_voltage = 0;  // v_c, in [0, rated voltage]
  double time = 0;
};

struct SehRunResult {
  VoltageTrace capacitor_voltage;  // v_c sampled on the input grid
  CircuitState final_state;        // state at the trailing edge of the trace
  bool saturated = false;          // v_c hit the rated voltage (clamped, not an error)
  double saturation_time = 0;      // first time the clamp engaged
};

// Co-simulates the harvester with the rectifier: the bridge conducts when
// |v| exceeds v_c + v_fd, with current (|v| - v_fd - v_c)/R_on; that current
// charges the capacitor and is drawn from the piezo node. No load resistor
// is present (the resistive fold-in of assemble_state_space is removed).
// x0 defaults to rest with an empty capacitor.
SehRunResult simulate_seh(const HarvesterDesign& design, const SEHParams& params,
                          const AccelerationTrace& trace, const CircuitState* x0 = nullptr);

// Energy stored in the capacitor at voltage v_c: C v_c^2 / 2.
double capacitor_energy(double v_c, double capacitance_f);

// capacitor_energy at each requested time, nearest-sample lookup on the
// simulated v_c trace. Times must lie within [0, duration].
std::vector<double> energy_at_times(const VoltageTrace& capacitor_voltage, double capacitance_f,
                                    std::span<const double> times_s);

// Half the RC time constant of the equivalent charging circuit: the span
// over which the charging curve is treated as linear.
double linear_window(const SEHParams& params, double equivalent_resistance_ohm);

// Rectifier + capacitor driven by an ideal voltage source (the harvester
// replaced by source_voltage(t)); used for closed-form charging checks.
VoltageTrace charge_from_source(const SEHParams& params,
                                const std::function<double(double)>& source_voltage,
                                double duration_s, double sample_rate_hz,
                                double initial_capacitor_voltage = 0.0);

}  // namespace peh
