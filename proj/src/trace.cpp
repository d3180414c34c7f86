#include "peh/trace.hpp"

#include <cmath>
#include <stdexcept>

namespace peh {
namespace {

void check_samples(const std::vector<double>& samples, double sample_rate,
                   const char* what) {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    throw std::invalid_argument(std::string(what) + ": sample_rate must be finite and > 0");
  if (samples.empty())
    throw std::invalid_argument(std::string(what) + ": empty sample vector");
  for (double s : samples)
    if (!std::isfinite(s))
      throw std::invalid_argument(std::string(what) + ": non-finite sample");
}

}  // namespace

void AccelerationTrace::validate() const {
  check_samples(samples, sample_rate, "AccelerationTrace");
  if (label && (*label < 1 || *label > 10))
    throw std::invalid_argument("AccelerationTrace: label must be in 1..10");
}

void VoltageTrace::validate() const {
  check_samples(samples, sample_rate, "VoltageTrace");
}

}  // namespace peh
