#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "peh/anomaly.hpp"
#include "peh/rng.hpp"

using namespace peh;

TEST_CASE("fit_anomaly: mean and sample standard deviation") {
  const std::vector<double> e = {1.0, 2.0, 3.0};
  const GaussianAnomalyModel m = fit_anomaly(e);
  CHECK(m.mean == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m.stddev == doctest::Approx(1.0).epsilon(1e-15));  // n-1 denominator
  CHECK(m.z_threshold == 3.0);
}

TEST_CASE("fit_anomaly rejects degenerate input") {
  const std::vector<double> two = {1.0, 2.0};
  CHECK_THROWS_AS(fit_anomaly(two), std::invalid_argument);
  const std::vector<double> flat = {2.0, 2.0, 2.0};
  CHECK_THROWS_AS(fit_anomaly(flat), std::invalid_argument);
  const std::vector<double> nan = {1.0, std::nan(""), 3.0};
  CHECK_THROWS_AS(fit_anomaly(nan), std::invalid_argument);
  const std::vector<double> ok = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(fit_anomaly(ok, 0.0), std::invalid_argument);
}

TEST_CASE("anomaly_score is the signed z-distance") {
  const std::vector<double> e = {1.0, 2.0, 3.0};
  const GaussianAnomalyModel m = fit_anomaly(e);
  CHECK(anomaly_score(m, 2.0) == doctest::Approx(0.0));
  CHECK(anomaly_score(m, 4.5) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(anomaly_score(m, -1.0) == doctest::Approx(-3.0).epsilon(1e-12));
}

TEST_CASE("classify_energy: boundary inclusive on both sides") {
  GaussianAnomalyModel m;
  m.mean = 10.0;
  m.stddev = 2.0;
  m.z_threshold = 3.0;
  CHECK(classify_energy(m, 10.0) == HealthCall::healthy);
  CHECK(classify_energy(m, 16.0) == HealthCall::healthy);   // z = +3 exactly
  CHECK(classify_energy(m, 4.0) == HealthCall::healthy);    // z = -3 exactly
  CHECK(classify_energy(m, 16.0001) == HealthCall::anomalous);
  CHECK(classify_energy(m, 3.9999) == HealthCall::anomalous);
}

TEST_CASE("detector separates far-shifted energies with no false alarms") {
  std::mt19937_64 rng = make_rng(7001);
  NormalSampler normal;
  std::vector<double> healthy(500);
  for (double& x : healthy) x = 10.0 + 0.5 * normal(rng);
  const GaussianAnomalyModel m = fit_anomaly(healthy);

  // Healthy test draws kept well inside the band (0.2 sigma spread, so an
  // alarm would need a ~15-sigma draw).
  int false_alarms = 0;
  for (int i = 0; i < 200; ++i)
    false_alarms += classify_energy(m, 10.0 + 0.1 * normal(rng)) == HealthCall::anomalous;
  CHECK(false_alarms == 0);

  // A 20-sigma shift is always caught.
  int caught = 0;
  for (int i = 0; i < 200; ++i)
    caught += classify_energy(m, 20.0 + 0.5 * normal(rng)) == HealthCall::anomalous;
  CHECK(caught == 200);
}
