#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "peh/trace.hpp"

namespace peh {

// Modal description of a cantilever piezoelectric harvester with K modes and
// a single electrical port. All per-mode vectors have length K.
struct HarvesterDesign {
  std::string name;
  std::vector<double> natural_frequencies_hz;
  std::vector<double> damping_ratios;
  std::vector<double> modal_coupling;   // voltage -> modal force (theta_o)
  std::vector<double> output_coupling;  // modal velocity -> current (Theta^T Phi_o)
  std::vector<double> modal_forcing;    // base acceleration participation (f_o)
  double piezo_capacitance_f = 0.0;
  double load_resistance_ohm = 0.0;

  std::size_t mode_count() const { return natural_frequencies_hz.size(); }
  void validate() const;  // throws std::invalid_argument
};

// x = {eta (K), eta_dot (K), v (1)};  x_dot = A x + B u,  u = {a_base, i_inject}.
struct StateSpaceSystem {
  Eigen::MatrixXd A;  // (2K+1) x (2K+1)
  Eigen::MatrixXd B;  // (2K+1) x 2
  std::size_t modes = 0;
};

// Builds A and B with the resistive load current v/R_l folded into A's
// bottom-right entry. The second input column injects current at the
// electrical node and is used by the rectifier co-simulation.
StateSpaceSystem assemble_state_space(const HarvesterDesign& design);

// Integrates the state-space model driven by the acceleration trace
// (linearly interpolated between samples) and returns the load voltage
// sampled on the input grid. x0 defaults to rest; if given, its length must
// be 2K+1.
VoltageTrace simulate_resistive(const HarvesterDesign& design, const AccelerationTrace& trace,
                                std::span<const double> x0 = {});

struct FRFCurve {
  std::vector<double> frequencies;  // Hz
  std::vector<double> magnitude;    // |V per m/s^2|
  std::vector<double> phase;        // rad
};

// Voltage response per unit base acceleration: for each frequency solve
// (j*omega*I - A) X = B*{1,0} and take the voltage component.
FRFCurve frf(const HarvesterDesign& design, std::span<const double> frequencies_hz);

// The ten single-mode designs used throughout the studies. Natural
// frequencies {100,150,50,200,250,300,350,400,450,500} Hz (device 3 is the
// 50 Hz design, device 9 the 450 Hz one); shared damping, capacitance and
// load defaults; coupling scaled so each device peaks near 1 V per m/s^2.
std::vector<HarvesterDesign> default_device_bank();

}  // namespace peh
