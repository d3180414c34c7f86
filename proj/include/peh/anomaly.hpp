#pragma once

#include <span>

namespace peh {

// Gaussian Z-score detector over harvested-energy samples.
struct GaussianAnomalyModel {
  double mean = 0.0;    // J
  double stddev = 0.0;  // J, sample (n-1) estimate
  double z_threshold = 3.0;
};

enum class HealthCall { healthy, anomalous };

// Fits mean and sample standard deviation to healthy-condition energies.
// Throws std::invalid_argument on fewer than 3 samples or zero spread.
GaussianAnomalyModel fit_anomaly(std::span<const double> healthy_energies,
                                 double z_threshold = 3.0);

// Signed distance from the healthy mean in standard deviations.
double anomaly_score(const GaussianAnomalyModel& model, double energy);

// healthy iff |score| <= z_threshold (boundary inclusive).
HealthCall classify_energy(const GaussianAnomalyModel& model, double energy);

}  // namespace peh
