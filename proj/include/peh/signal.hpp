#pragma once

#include <cstddef>
#include <vector>

#include "peh/trace.hpp"

namespace peh {

// FFT scaling convention carried by a Spectrum so energy computations are
// well-defined. `amplitude`: one-sided, magnitudes are physical amplitudes
// (DC and Nyquist bins unpaired). `raw`: unscaled |DFT| bins, one-sided.
enum class SpectrumNormalization { unknown, amplitude, raw };

struct Spectrum {
  std::vector<double> frequencies;  // Hz, strictly increasing from 0
  std::vector<double> magnitudes;   // same unit as the input signal (amplitude)
  SpectrumNormalization normalization = SpectrumNormalization::unknown;
  std::size_t source_samples = 0;   // input length, distinguishes the Nyquist bin
};

// One-sided magnitude spectrum up to Nyquist. Thread-safe.
Spectrum fft_magnitude(const std::vector<double>& samples, double sample_rate,
                       SpectrumNormalization normalization = SpectrumNormalization::amplitude);
Spectrum fft_magnitude(const VoltageTrace& trace,
                       SpectrumNormalization normalization = SpectrumNormalization::amplitude);
Spectrum fft_magnitude(const AccelerationTrace& trace,
                       SpectrumNormalization normalization = SpectrumNormalization::amplitude);

// Energy dissipated across a resistive load: dt * sum(v_k^2) / R_l.
// Each sample owns one full sample interval, so window energies add up
// exactly to the whole-trace energy.
double energy_time_domain(const VoltageTrace& v, double load_resistance);

// Same energy recovered from a one-sided magnitude spectrum via the Parseval
// identity; `duration` is the time span of the originating trace.
double energy_parseval(const Spectrum& spectrum, double load_resistance, double duration);

// Running energy total after each sample (same convention as
// energy_time_domain; last entry equals the whole-trace energy).
std::vector<double> cumulative_energy(const VoltageTrace& v, double load_resistance);

// Splits a trace into consecutive disjoint windows of window_s seconds,
// discarding the trailing remainder. Window length in samples is
// round(window_s * sample_rate); the count is computed in integer
// arithmetic so e.g. 10 s at 0.1 s yields exactly 100 windows.
std::vector<AccelerationTrace> window_events(const AccelerationTrace& trace, double window_s);
std::vector<VoltageTrace> window_events(const VoltageTrace& trace, double window_s);

}  // namespace peh
