#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace peh {

// Base-excitation acceleration record, uniformly sampled.
struct AccelerationTrace {
  std::vector<double> samples;  // m/s^2
  double sample_rate = 0.0;     // Hz
  std::optional<int> label;     // bearing condition 1..10, if known
  std::string source_id;        // free-form provenance (file name, synth id)

  std::size_t size() const { return samples.size(); }
  double dt() const { return 1.0 / sample_rate; }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  // Throws std::invalid_argument when the record violates its invariants.
  void validate() const;
};

// Voltage record produced by a simulation, uniformly sampled.
struct VoltageTrace {
  std::vector<double> samples;  // V
  double sample_rate = 0.0;     // Hz

  std::size_t size() const { return samples.size(); }
  double dt() const { return 1.0 / sample_rate; }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  void validate() const;
};

}  // namespace peh
