#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "peh/errors.hpp"

namespace peh {

struct OdeOptions {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double max_step = 0.0;      // required; simulations tie this to the input grid
  double initial_step = 0.0;  // 0 -> start at max_step
};

// Clamped linear interpolation over uniform samples starting at t=0.
// Values before the first sample / after the last are held constant.
class LinearInterpolant {
 public:
  LinearInterpolant(std::span<const double> samples, double sample_rate)
      : samples_(samples), rate_(sample_rate) {}

  double operator()(double t) const {
    const double pos = t * rate_;
    if (pos <= 0.0) return samples_.front();
    const auto n = samples_.size();
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= n) return samples_.back();
    const double frac = pos - static_cast<double>(i);
    return samples_[i] + frac * (samples_[i + 1] - samples_[i]);
  }

 private:
  std::span<const double> samples_;
  double rate_;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double kDP_c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double kDP_a2[1] = {1.0 / 5};
inline constexpr double kDP_a3[2] = {3.0 / 40, 9.0 / 40};
inline constexpr double kDP_a4[3] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
inline constexpr double kDP_a5[4] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
inline constexpr double kDP_a6[5] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                                     -5103.0 / 18656};
inline constexpr double kDP_b[7] = {35.0 / 384,     0.0,        500.0 / 1113, 125.0 / 192,
                                    -2187.0 / 6784, 11.0 / 84,  0.0};
// b(5th) - b(4th): weights of the embedded error estimate.
inline constexpr double kDP_e[7] = {71.0 / 57600,       0.0,         -71.0 / 16695, 71.0 / 1920,
                                    -17253.0 / 339200,  22.0 / 525,  -1.0 / 40};

inline bool finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace detail

// Adaptive Dormand-Prince 4(5) integration of y' = rhs(t, y) from t0 to t_end.
//
// - `sample_times` must be ascending and lie in [t0, t_end]; for each one,
//   on_sample(index, t, y) is called with the dense-output state (cubic
//   Hermite over the accepted step containing it).
// - `post_step(t, y)` runs after every accepted step and may mutate y (state
//   projection, e.g. a voltage clamp); return true if y changed.
// - Returns the state at t_end.
//
// Throws IntegratorError on step-size underflow or persistent rejection,
// reporting the time reached.
template <class Rhs, class Sink, class PostStep>
std::vector<double> integrate_sampled(Rhs&& rhs, std::vector<double> y, double t0, double t_end,
                                      std::span<const double> sample_times, const OdeOptions& opt,
                                      Sink&& on_sample, PostStep&& post_step) {
  using detail::kDP_a2;
  using detail::kDP_a3;
  using detail::kDP_a4;
  using detail::kDP_a5;
  using detail::kDP_a6;
  using detail::kDP_b;
  using detail::kDP_c;
  using detail::kDP_e;

  if (!(opt.max_step > 0.0)) throw std::invalid_argument("integrate_sampled: max_step must be > 0");
  if (!(t_end >= t0)) throw std::invalid_argument("integrate_sampled: t_end < t0");
  const double time_eps =
      16.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(t0), std::abs(t_end)});
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < t0 - time_eps || sample_times[i] > t_end + time_eps)
      throw std::invalid_argument("integrate_sampled: sample time outside [t0, t_end]");
    if (i > 0 && sample_times[i] < sample_times[i - 1])
      throw std::invalid_argument("integrate_sampled: sample times not ascending");
  }

  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> ytmp(n), ynew(n), yerr(n), ysample(n);

  double t = t0;
  std::size_t si = 0;
  // Samples coinciding with the start.
  while (si < sample_times.size() && sample_times[si] <= t + time_eps) {
    on_sample(si, sample_times[si], y);
    ++si;
  }
  if (t_end <= t0 + time_eps) return y;

  rhs(t, y, k1);
  double h = (opt.initial_step > 0.0 ? opt.initial_step : opt.max_step);
  int consecutive_rejects = 0;
  std::size_t total_steps = 0;
  constexpr std::size_t kMaxSteps = 1000000000;

  while (t < t_end - time_eps) {
    if (++total_steps > kMaxSteps) throw IntegratorError("step budget exhausted", t);
    h = std::min({h, opt.max_step, t_end - t});
    if (h < time_eps) throw IntegratorError("step size underflow", t);

    // Stages (k1 carried over, FSAL).
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * kDP_a2[0] * k1[i];
    rhs(t + kDP_c[1] * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kDP_a3[0] * k1[i] + kDP_a3[1] * k2[i]);
    rhs(t + kDP_c[2] * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kDP_a4[0] * k1[i] + kDP_a4[1] * k2[i] + kDP_a4[2] * k3[i]);
    rhs(t + kDP_c[3] * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kDP_a5[0] * k1[i] + kDP_a5[1] * k2[i] + kDP_a5[2] * k3[i] +
                            kDP_a5[3] * k4[i]);
    rhs(t + kDP_c[4] * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kDP_a6[0] * k1[i] + kDP_a6[1] * k2[i] + kDP_a6[2] * k3[i] +
                            kDP_a6[3] * k4[i] + kDP_a6[4] * k5[i]);
    rhs(t + kDP_c[5] * h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (kDP_b[0] * k1[i] + kDP_b[2] * k3[i] + kDP_b[3] * k4[i] +
                            kDP_b[4] * k5[i] + kDP_b[5] * k6[i]);
    rhs(t + h, ynew, k7);

    // Scaled error norm of the embedded 4th-order solution.
    double err_sq = 0.0;
    bool ok = detail::finite(ynew) && detail::finite(k7);
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) {
        const double e = h * (kDP_e[0] * k1[i] + kDP_e[2] * k3[i] + kDP_e[3] * k4[i] +
                              kDP_e[4] * k5[i] + kDP_e[5] * k6[i] + kDP_e[6] * k7[i]);
        const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err_sq += (e / sc) * (e / sc);
      }
      err_sq /= static_cast<double>(n);
      ok = std::isfinite(err_sq);
    }
    const double err = ok ? std::sqrt(err_sq) : std::numeric_limits<double>::infinity();

    if (err <= 1.0) {
      const double t_new = t + h;
      // Dense output: cubic Hermite on (y, k1) .. (ynew, k7).
      while (si < sample_times.size() && sample_times[si] <= t_new + time_eps) {
        const double th = std::clamp((sample_times[si] - t) / h, 0.0, 1.0);
        const double th2 = th * th, th3 = th2 * th;
        const double h00 = 2 * th3 - 3 * th2 + 1, h10 = th3 - 2 * th2 + th;
        const double h01 = -2 * th3 + 3 * th2, h11 = th3 - th2;
        for (std::size_t i = 0; i < n; ++i)
          ysample[i] = h00 * y[i] + h10 * h * k1[i] + h01 * ynew[i] + h11 * h * k7[i];
        on_sample(si, sample_times[si], ysample);
        ++si;
      }
      y.swap(ynew);
      t = t_new;
      k1.swap(k7);
      if (post_step(t, y)) rhs(t, y, k1);  // projection invalidated the FSAL slope
      consecutive_rejects = 0;
      const double grow = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
    } else {
      if (++consecutive_rejects > 100)
        throw IntegratorError("no acceptable step after 100 rejections", t);
      const double shrink =
          std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.1;
      h *= shrink;
    }
  }
  // Flush samples at (or within rounding of) t_end.
  while (si < sample_times.size()) {
    on_sample(si, sample_times[si], y);
    ++si;
  }
  return y;
}

template <class Rhs, class Sink>
std::vector<double> integrate_sampled(Rhs&& rhs, std::vector<double> y, double t0, double t_end,
                                      std::span<const double> sample_times, const OdeOptions& opt,
                                      Sink&& on_sample) {
  return integrate_sampled(static_cast<Rhs&&>(rhs), std::move(y), t0, t_end, sample_times, opt,
                           static_cast<Sink&&>(on_sample),
                           [](double, std::vector<double>&) { return false; });
}

}  // namespace peh
