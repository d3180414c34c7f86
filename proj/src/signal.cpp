#include "peh/signal.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace peh {
namespace {

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit FftwBuffer(std::size_t n) {
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("fftw: plan creation failed");
  }
  ~FftwBuffer() {
    {
      std::lock_guard<std::mutex> lock(fftw_plan_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

}  // namespace

Spectrum fft_magnitude(const std::vector<double>& samples, double sample_rate,
                       SpectrumNormalization normalization) {
  if (samples.size() < 2)
    throw std::invalid_argument("fft_magnitude: trace too short (need >= 2 samples)");
  if (!(sample_rate > 0.0))
    throw std::invalid_argument("fft_magnitude: sample_rate must be > 0");
  if (normalization == SpectrumNormalization::unknown)
    throw std::invalid_argument("fft_magnitude: unknown normalization tag");

  const std::size_t n = samples.size();
  const std::size_t bins = n / 2 + 1;

  FftwBuffer buf(n);
  std::memcpy(buf.in, samples.data(), n * sizeof(double));
  fftw_execute(buf.plan);

  Spectrum s;
  s.normalization = normalization;
  s.source_samples = n;
  s.frequencies.resize(bins);
  s.magnitudes.resize(bins);
  const double df = sample_rate / static_cast<double>(n);
  const bool even = (n % 2 == 0);
  for (std::size_t k = 0; k < bins; ++k) {
    s.frequencies[k] = df * static_cast<double>(k);
    double mag = std::hypot(buf.out[k][0], buf.out[k][1]);
    if (normalization == SpectrumNormalization::amplitude) {
      const bool unpaired = (k == 0) || (even && k == bins - 1);
      mag *= (unpaired ? 1.0 : 2.0) / static_cast<double>(n);
    }
    s.magnitudes[k] = mag;
  }
  return s;
}

Spectrum fft_magnitude(const VoltageTrace& trace, SpectrumNormalization normalization) {
  trace.validate();
  return fft_magnitude(trace.samples, trace.sample_rate, normalization);
}

Spectrum fft_magnitude(const AccelerationTrace& trace, SpectrumNormalization normalization) {
  trace.validate();
  return fft_magnitude(trace.samples, trace.sample_rate, normalization);
}

double energy_time_domain(const VoltageTrace& v, double load_resistance) {
  if (!(load_resistance > 0.0))
    throw std::invalid_argument("energy_time_domain: load resistance must be > 0");
  v.validate();
  double acc = 0.0;
  for (double s : v.samples) acc += s * s;
  return acc * v.dt() / load_resistance;
}

double energy_parseval(const Spectrum& spectrum, double load_resistance, double duration) {
  if (!(load_resistance > 0.0))
    throw std::invalid_argument("energy_parseval: load resistance must be > 0");
  if (!(duration > 0.0))
    throw std::invalid_argument("energy_parseval: duration must be > 0");
  if (spectrum.normalization == SpectrumNormalization::unknown)
    throw std::invalid_argument("energy_parseval: unknown normalization tag");
  if (spectrum.source_samples < 2)
    throw std::invalid_argument("energy_parseval: spectrum lacks source sample count");

  const std::size_t n = spectrum.source_samples;
  const std::size_t bins = spectrum.magnitudes.size();
  const bool even = (n % 2 == 0);

  // Recover sum(x_k^2) from the one-sided bins, then E = dt*sum/R with
  // dt = duration/n.
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    const double m = spectrum.magnitudes[k];
    const bool unpaired = (k == 0) || (even && k == bins - 1);
    if (spectrum.normalization == SpectrumNormalization::amplitude) {
      // m = |H|/n (unpaired) or 2|H|/n (paired); |H|^2 contributes once or twice.
      const double h = unpaired ? m * static_cast<double>(n)
                                : m * static_cast<double>(n) / 2.0;
      sum_sq += (unpaired ? 1.0 : 2.0) * h * h;
    } else {  // raw: m = |H|
      sum_sq += (unpaired ? 1.0 : 2.0) * m * m;
    }
  }
  sum_sq /= static_cast<double>(n);
  return sum_sq * (duration / static_cast<double>(n)) / load_resistance;
}

std::vector<double> cumulative_energy(const VoltageTrace& v, double load_resistance) {
  if (!(load_resistance > 0.0))
    throw std::invalid_argument("cumulative_energy: load resistance must be > 0");
  v.validate();
  std::vector<double> out(v.samples.size());
  const double scale = v.dt() / load_resistance;
  double acc = 0.0;
  for (std::size_t i = 0; i < v.samples.size(); ++i) {
    acc += v.samples[i] * v.samples[i];
    out[i] = acc * scale;
  }
  return out;
}

namespace {

template <typename TraceT>
std::vector<TraceT> window_events_impl(const TraceT& trace, double window_s) {
  trace.validate();
  const auto n = trace.samples.size();
  const long long w = std::llround(window_s * trace.sample_rate);
  if (w < 2)
    throw std::invalid_argument("window_events: window shorter than 2 samples");
  if (static_cast<std::size_t>(w) > n)
    throw std::invalid_argument("window_events: window longer than trace");
  const std::size_t count = n / static_cast<std::size_t>(w);

  std::vector<TraceT> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TraceT win = trace;
    const auto begin = trace.samples.begin() + static_cast<std::ptrdiff_t>(i * w);
    win.samples.assign(begin, begin + w);
    out.push_back(std::move(win));
  }
  return out;
}

}  // namespace

std::vector<AccelerationTrace> window_events(const AccelerationTrace& trace, double window_s) {
  return window_events_impl(trace, window_s);
}

std::vector<VoltageTrace> window_events(const VoltageTrace& trace, double window_s) {
  return window_events_impl(trace, window_s);
}

}  // namespace peh
