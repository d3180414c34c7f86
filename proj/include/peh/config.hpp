#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "peh/dataset.hpp"
#include "peh/harvester.hpp"
#include "peh/ml.hpp"
#include "peh/seh.hpp"
#include "peh/stiefel.hpp"

namespace peh {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Raised on any malformed experiment configuration; the message always
// starts with the dotted path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

enum class SourceKind { synthetic, mat_dir, csv_dir };

struct SyntheticSourceConfig {
  int traces_per_label = 6;
  double duration_s = 0.9;
  double sample_rate_hz = 4000.0;
  double base_amplitude_ms2 = 0.8;
  double noise_rms_ms2 = 0.5;
};

struct SourceConfig {
  SourceKind kind = SourceKind::synthetic;
  std::filesystem::path mat_dir;     // when kind == mat_dir
  std::filesystem::path csv_dir;     // when kind == csv_dir
  std::filesystem::path labels_csv;  // filename,label[,sample_rate_hz] manifest
  double mat_rate_hz = 12000.0;      // sample rate of archive records
  SyntheticSourceConfig synthetic;
};

struct DeviceConfig {
  std::vector<int> indices;  // 1-based positions in the default bank; empty = all
};

struct CircuitConfig {
  CircuitKind kind = CircuitKind::resistive;
  SEHParams seh;
};

struct WindowConfig {
  std::vector<double> lengths_s = {0.3};
  std::vector<double> time_points_s;  // storage-circuit checkpoint times
};

struct AugmentConfig {
  bool enabled = false;
  double beta = 0.1;
  int rows = 150;
  int cols = 100;
  ReshapeStrategy strategy = ReshapeStrategy::pad;
  int per_label = 300;        // synthetic traces to emit per label
  double seed_fraction = 0.5; // share of real traces used as perturbation seeds
  std::uint64_t seed = 0;
};

struct ClassifierConfig {
  std::vector<ClassifierKind> kinds = {ClassifierKind::gaussian_nb};
  Hyperparams hyper;
};

struct AnomalyConfig {
  bool enabled = false;
  int healthy_label = 1;
  int device_index = 3;       // 1-based position in the default bank
  double z_threshold = 3.0;
  double fit_fraction = 0.5;  // share of healthy events used for fitting
};

struct ExperimentConfig {
  SourceConfig source;
  DeviceConfig devices;
  CircuitConfig circuit;
  WindowConfig windows;
  AugmentConfig augmentation;
  ClassifierConfig classifiers;
  int folds = 5;
  AnomalyConfig anomaly;
  int jobs = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  // Throws ConfigError naming the first offending field by dotted path.
  // Checks referenced files/directories exist where the source kind needs
  // them, and that every numeric field satisfies its module's invariants.
  void validate() const;

  // The configured subset of the default device bank (validated indices).
  std::vector<HarvesterDesign> selected_devices() const;
};

// Parse YAML text / file into a validated configuration. Unknown keys are
// rejected so typos cannot silently fall back to defaults.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical serialization: parse(serialize(c)) reproduces c exactly, and
// serialize is injective on validated configs (used for hashing).
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a over the canonical serialization, as a fixed-width hex string.
std::string config_hash(const ExperimentConfig& config);

// config_hash over the scientific configuration only: output location and
// worker count are normalized away, so runs that differ just in where
// results land (or how many threads ran them) share a fingerprint.
std::string config_fingerprint(const ExperimentConfig& config);

}  // namespace peh
