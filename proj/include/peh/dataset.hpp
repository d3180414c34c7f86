#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "peh/harvester.hpp"
#include "peh/seh.hpp"
#include "peh/trace.hpp"

namespace peh {

struct FeatureRow {
  std::int64_t event_id = 0;
  int label = 0;  // 1..10
  std::vector<double> features;
  std::string provenance;  // devices + circuit + window + time points + source
};

struct EnergyFeatureTable {
  std::vector<FeatureRow> rows;
  std::vector<std::string> feature_names;

  std::size_t feature_dim() const { return feature_names.size(); }
  void validate() const;  // throws std::invalid_argument
};

struct FoldAssignment {
  int fold_count = 0;
  std::map<std::int64_t, int> fold_of;  // event_id -> fold index

  int fold(std::int64_t event_id) const;
};

// Tones + white noise stand-in for a bearing-condition vibration signature.
struct Tone {
  double frequency_hz = 0.0;
  double amplitude = 0.0;  // m/s^2
};

struct SyntheticFaultSpec {
  std::vector<Tone> tones;
  double noise_rms = 0.0;  // m/s^2
  double duration_s = 0.0;
  double sample_rate_hz = 0.0;
  int label = 0;

  void validate() const;
};

// Sum of sinusoids (uniform random phase per tone) plus Gaussian noise at
// the stated RMS; deterministic for a given generator state.
AccelerationTrace synth_trace(const SyntheticFaultSpec& spec, std::mt19937_64& rng);

// The ten-label benchmark family: each label carries one tone per device
// resonance whose amplitude encodes (device, label) through a modular
// pattern, so labels separate only when several devices are combined.
std::vector<SyntheticFaultSpec> benchmark_fault_specs(double duration_s = 10.0,
                                                      double sample_rate_hz = 12000.0,
                                                      double base_amplitude = 0.8,
                                                      double noise_rms = 0.5);

enum class CircuitKind { resistive, seh };

struct FeatureBuildOptions {
  CircuitKind circuit = CircuitKind::resistive;
  double window_s = 0.3;
  std::vector<double> time_points_s;  // SEH only; within (0, window_s]
  SEHParams seh;
  int jobs = 1;
};

// Cuts every trace into events of window_s, simulates each event from rest
// on every device, and emits one row per event: features are ordered
// device-major, then time-point (resistive designs contribute one
// dissipated-energy feature each; SEH contributes capacitor energy at each
// requested time point).
//
// Event ids are a stable join key across tables built from the same traces:
// label * 1e6 + trace_rank_within_label * 1e4 + window_index, where traces
// rank in input order within their label. Throws when a label exceeds 100
// traces or a trace exceeds 10000 windows (the id digits would collide).
EnergyFeatureTable build_feature_table(std::span<const AccelerationTrace> traces,
                                       std::span<const HarvesterDesign> devices,
                                       const FeatureBuildOptions& options);

// Row-wise feature concatenation over tables describing the same events.
EnergyFeatureTable fuse(std::span<const EnergyFeatureTable> tables);

// Stratified K-fold assignment: per-label counts differ by at most one
// across folds; deterministic under the seed.
FoldAssignment kfold_split(const EnergyFeatureTable& table, int folds, std::uint64_t seed);

// CSV interchange: header "event_id,label,f0,f1,...".
void write_feature_csv(const std::filesystem::path& path, const EnergyFeatureTable& table);
EnergyFeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace peh
