#include "peh/harvester.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "peh/ode.hpp"

namespace peh {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void HarvesterDesign::validate() const {
  const std::size_t k = mode_count();
  if (k < 1) throw std::invalid_argument("HarvesterDesign: needs at least one mode");
  if (damping_ratios.size() != k || modal_coupling.size() != k ||
      output_coupling.size() != k || modal_forcing.size() != k)
    throw std::invalid_argument("HarvesterDesign: per-mode vectors must share length K");
  for (double f : natural_frequencies_hz)
    if (!(f > 0.0)) throw std::invalid_argument("HarvesterDesign: natural frequency must be > 0");
  for (double z : damping_ratios)
    if (!(z > 0.0 && z < 1.0))
      throw std::invalid_argument("HarvesterDesign: damping ratio must be in (0, 1)");
  for (double v : modal_coupling)
    if (!std::isfinite(v)) throw std::invalid_argument("HarvesterDesign: non-finite coupling");
  for (double v : output_coupling)
    if (!std::isfinite(v)) throw std::invalid_argument("HarvesterDesign: non-finite coupling");
  for (double v : modal_forcing)
    if (!std::isfinite(v)) throw std::invalid_argument("HarvesterDesign: non-finite forcing");
  if (!(piezo_capacitance_f > 0.0))
    throw std::invalid_argument("HarvesterDesign: piezo capacitance must be > 0");
  if (!(load_resistance_ohm > 0.0))
    throw std::invalid_argument("HarvesterDesign: load resistance must be > 0");
}

StateSpaceSystem assemble_state_space(const HarvesterDesign& design) {
  design.validate();
  const auto k = static_cast<Eigen::Index>(design.mode_count());
  const Eigen::Index n = 2 * k + 1;

  StateSpaceSystem sys;
  sys.modes = design.mode_count();
  sys.A = Eigen::MatrixXd::Zero(n, n);
  sys.B = Eigen::MatrixXd::Zero(n, 2);

  for (Eigen::Index i = 0; i < k; ++i) {
    const double wn = kTwoPi * design.natural_frequencies_hz[static_cast<std::size_t>(i)];
    const double zeta = design.damping_ratios[static_cast<std::size_t>(i)];
    sys.A(i, k + i) = 1.0;                     // eta_dot
    sys.A(k + i, i) = -wn * wn;                // -k_o
    sys.A(k + i, k + i) = -2.0 * zeta * wn;    // -c_o
    sys.A(k + i, n - 1) = design.modal_coupling[static_cast<std::size_t>(i)];
    sys.A(n - 1, k + i) =
        -design.output_coupling[static_cast<std::size_t>(i)] / design.piezo_capacitance_f;
    sys.B(k + i, 0) = design.modal_forcing[static_cast<std::size_t>(i)];
  }
  // Resistive load: i = v / R_l drawn from the electrical node.
  sys.A(n - 1, n - 1) = -1.0 / (design.load_resistance_ohm * design.piezo_capacitance_f);
  sys.B(n - 1, 1) = 1.0 / design.piezo_capacitance_f;
  return sys;
}

VoltageTrace simulate_resistive(const HarvesterDesign& design, const AccelerationTrace& trace,
                                std::span<const double> x0) {
  trace.validate();
  const StateSpaceSystem sys = assemble_state_space(design);
  const auto n = static_cast<std::size_t>(sys.A.rows());
  if (!x0.empty() && x0.size() != n)
    throw std::invalid_argument("simulate_resistive: x0 must have length 2K+1");

  std::vector<double> y(n, 0.0);
  if (!x0.empty()) y.assign(x0.begin(), x0.end());

  const double dt = trace.dt();
  const std::size_t ns = trace.samples.size();
  std::vector<double> times(ns);
  for (std::size_t i = 0; i < ns; ++i) times[i] = static_cast<double>(i) * dt;

  LinearInterpolant accel(trace.samples, trace.sample_rate);
  const Eigen::MatrixXd& A = sys.A;
  const Eigen::MatrixXd& B = sys.B;

  auto rhs = [&](double t, const std::vector<double>& x, std::vector<double>& dx) {
    const double a = accel(t);
    for (std::size_t r = 0; r < n; ++r) {
      double acc = B(static_cast<Eigen::Index>(r), 0) * a;
      for (std::size_t c = 0; c < n; ++c)
        acc += A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * x[c];
      dx[r] = acc;
    }
  };

  OdeOptions opt;
  opt.max_step = 0.5 * dt;

  VoltageTrace out;
  out.sample_rate = trace.sample_rate;
  out.samples.assign(ns, 0.0);
  integrate_sampled(
      rhs, std::move(y), 0.0, static_cast<double>(ns) * dt, times, opt,
      [&](std::size_t i, double, const std::vector<double>& x) { out.samples[i] = x[n - 1]; });
  return out;
}

FRFCurve frf(const HarvesterDesign& design, std::span<const double> frequencies_hz) {
  const StateSpaceSystem sys = assemble_state_space(design);
  const Eigen::Index n = sys.A.rows();
  const Eigen::VectorXcd b = sys.B.col(0).cast<std::complex<double>>();

  FRFCurve curve;
  curve.frequencies.reserve(frequencies_hz.size());
  curve.magnitude.reserve(frequencies_hz.size());
  curve.phase.reserve(frequencies_hz.size());

  for (double f : frequencies_hz) {
    if (!(f > 0.0)) throw std::invalid_argument("frf: frequencies must be > 0");
    const std::complex<double> jw(0.0, kTwoPi * f);
    Eigen::MatrixXcd M = -sys.A.cast<std::complex<double>>();
    M.diagonal().array() += jw;
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    if (lu.determinant() == std::complex<double>(0.0, 0.0))
      throw std::runtime_error("frf: singular system at " + std::to_string(f) + " Hz");
    const Eigen::VectorXcd x = lu.solve(b);
    const std::complex<double> v = x(n - 1);
    curve.frequencies.push_back(f);
    curve.magnitude.push_back(std::abs(v));
    curve.phase.push_back(std::arg(v));
  }
  return curve;
}

std::vector<HarvesterDesign> default_device_bank() {
  // Device 3 carries the lowest resonance (50 Hz) and device 9 the 450 Hz
  // one; the remaining frequencies fill the 50..500 Hz band.
  static const double kFreqs[10] = {100, 150, 50, 200, 250, 300, 350, 400, 450, 500};
  std::vector<HarvesterDesign> bank;
  bank.reserve(10);
  for (int d = 0; d < 10; ++d) {
    HarvesterDesign h;
    h.name = "device" + std::to_string(d + 1);
    const double fn = kFreqs[d];
    h.natural_frequencies_hz = {fn};
    h.damping_ratios = {0.02};
    // theta = 4e-9 * wn^2 equalizes the resonant FRF peaks at ~1 V/(m/s^2)
    // across the bank (peak magnitude scales as theta/(...wn^2) terms).
    const double theta = 4e-9 * (kTwoPi * fn) * (kTwoPi * fn);
    h.modal_coupling = {theta};
    h.output_coupling = {theta};
    h.modal_forcing = {1.0};
    h.piezo_capacitance_f = 100e-9;
    h.load_resistance_ohm = 1e5;
    bank.push_back(std::move(h));
  }
  return bank;
}

}  // namespace peh
