#include "peh/anomaly.hpp"

#include <cmath>
#include <stdexcept>

namespace peh {

GaussianAnomalyModel fit_anomaly(std::span<const double> healthy_energies, double z_threshold) {
  if (healthy_energies.size() < 3)
    throw std::invalid_argument("fit_anomaly: need at least 3 healthy samples");
  if (!(z_threshold > 0.0)) throw std::invalid_argument("fit_anomaly: threshold must be > 0");
  for (double e : healthy_energies)
    if (!std::isfinite(e)) throw std::invalid_argument("fit_anomaly: non-finite energy");

  const auto n = static_cast<double>(healthy_energies.size());
  double mean = 0.0;
  for (double e : healthy_energies) mean += e;
  mean /= n;
  double ss = 0.0;
  for (double e : healthy_energies) ss += (e - mean) * (e - mean);
  const double stddev = std::sqrt(ss / (n - 1.0));
  if (!(stddev > 0.0)) throw std::invalid_argument("fit_anomaly: zero spread in healthy energies");

  GaussianAnomalyModel model;
  model.mean = mean;
  model.stddev = stddev;
  model.z_threshold = z_threshold;
  return model;
}

double anomaly_score(const GaussianAnomalyModel& model, double energy) {
  return (energy - model.mean) / model.stddev;
}

HealthCall classify_energy(const GaussianAnomalyModel& model, double energy) {
  return std::abs(anomaly_score(model, energy)) <= model.z_threshold ? HealthCall::healthy
                                                                    : HealthCall::anomalous;
}

}  // namespace peh
