#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "peh/anomaly.hpp"
#include "peh/config.hpp"
#include "peh/dataset.hpp"
#include "peh/ml.hpp"
#include "peh/trace.hpp"

namespace peh {

// Least-squares line y = slope*x + intercept. r2 is the coefficient of
// determination; a constant target that is matched exactly scores 1, and
// degenerate inputs (fewer than two points, zero x spread) give slope 0.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Loads the labeled corpus named by the config: the synthetic benchmark
// family, a directory of MAT recordings, or a directory of trace CSVs (the
// directories are described by a manifest with columns file,label and, for
// MAT files, an optional variable-name pattern). Throws ConfigError on
// unreadable inputs.
std::vector<AccelerationTrace> load_source_traces(const ExperimentConfig& config);

// One window cut from a source trace, carrying the event id that
// build_feature_table assigns to the same window.
struct EventRecord {
  std::int64_t event_id = 0;
  int label = 0;
  std::string source;  // "<trace source_id>;win=<k>"
  AccelerationTrace window;
};
std::vector<EventRecord> cut_events(std::span<const AccelerationTrace> traces, double window_s);

// An orthonormal-frame-perturbed copy of one windowed event. The copy keeps
// its seed's label, length and sample rate.
struct AugmentedEvent {
  std::int64_t seed_event_id = 0;
  int label = 0;
  std::uint64_t rng_seed = 0;  // generator seed used for this copy
  AccelerationTrace window;
};

// Per label, emits per_label perturbed copies seeded from the first
// ceil(seed_fraction * n) events of that label (cycled in order). Output is
// ordered label-major, copy index within label.
std::vector<AugmentedEvent> augment_events(std::span<const EventRecord> events,
                                           const AugmentConfig& config, int jobs);

// K-fold evaluation of `base` where `extras` rows join every training fold
// except the fold of the event they were derived from; evaluation rows are
// always drawn from `base` alone. This keeps perturbed copies from training
// the fold that scores their seed event.
CvResult cross_validate_with_training_extras(
    ClassifierKind kind, const Hyperparams& hp, std::uint64_t seed,
    const EnergyFeatureTable& base, const EnergyFeatureTable& extras,
    const std::map<std::int64_t, std::int64_t>& extra_seed_of, const FoldAssignment& folds);

// -- study grid -------------------------------------------------------------

struct StudyCell {
  std::string device_set;                 // device name, or "fused"
  std::vector<std::size_t> device_slots;  // positions within the selected bank
  double window_s = 0.0;
  ClassifierKind classifier = ClassifierKind::gaussian_nb;
  bool augmented = false;

  std::string slug() const;  // deterministic artifact-name fragment
};

struct CellResult {
  StudyCell cell;
  bool ok = false;
  std::string error;
  std::size_t events = 0;
  std::size_t features = 0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

// Whole-trace energy diagnostic: total harvested energy and the straight
// line fitted to the cumulative-energy curve (slope is mean power in W).
struct TraceStat {
  std::string device;
  std::string source_id;
  int label = 0;
  double total_energy_j = 0.0;
  LineFit fit;
};

struct CurvePoint {
  std::string device;
  int label = 0;
  double t_s = 0.0;
  double energy_j = 0.0;
};

struct HistogramBin {
  std::string device;
  int label = 0;
  double lo_j = 0.0;
  double hi_j = 0.0;
  std::int64_t count = 0;
};

struct CovRow {
  std::string device;
  int label = 0;
  std::size_t events = 0;
  double mean_j = 0.0;
  double std_j = 0.0;  // sample (n-1) estimate
  double cov = 0.0;    // std/mean, 0 when the mean vanishes
};

struct FrfPoint {
  std::string device;
  double freq_hz = 0.0;
  double magnitude = 0.0;  // V per m/s^2
  double phase_rad = 0.0;
};

struct AnomalyEventRow {
  std::int64_t event_id = 0;
  int label = 0;
  std::string source;
  double energy_j = 0.0;
  double score = 0.0;
  bool alarm = false;
  bool used_for_fit = false;
};

struct AnomalyReport {
  bool enabled = false;
  std::string device;
  double window_s = 0.0;
  int healthy_label = 1;
  GaussianAnomalyModel model;
  std::vector<AnomalyEventRow> events;  // fit rows first, then evaluation rows
};

// Fits the healthy-energy model on the leading fit_fraction of healthy
// events and scores every event of the corpus on the configured device.
AnomalyReport run_anomaly(const ExperimentConfig& config,
                          std::span<const AccelerationTrace> traces);

struct StudyResult {
  std::string version;
  std::string fingerprint;
  ExperimentConfig config;
  std::size_t trace_count = 0;
  std::map<int, std::size_t> label_counts;
  std::vector<std::string> device_names;  // selected bank, in order
  std::vector<FrfPoint> frf;
  std::vector<TraceStat> trace_stats;
  std::vector<CurvePoint> energy_curves;  // first trace of each label
  std::vector<HistogramBin> histogram;    // event energies, first window
  std::vector<CovRow> cov;                // event energies, first window
  std::vector<CellResult> cells;
  AnomalyReport anomaly;

  std::size_t failed_cells() const;
};

// Runs the full grid (device sets x windows x classifiers, plus augmented
// twins when enabled) with per-cell error isolation, and every diagnostic.
StudyResult run_study(const ExperimentConfig& config);

// Writes the tabular artifacts (CSV + resolved config) into dir.
void write_study_artifacts(const StudyResult& result, const std::filesystem::path& dir);

// Writes the anomaly subset of artifacts on its own.
void write_anomaly_artifacts(const AnomalyReport& report, const std::filesystem::path& dir);

// Reads whatever recognized CSV artifacts exist in dir and (re)draws their
// charts; SVG bytes depend on the CSV contents alone.
void render_report_charts(const std::filesystem::path& dir);

// -- generic CSV table ------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position for `name`; throws std::invalid_argument when absent.
  std::size_t col(const std::string& name) const;
};

// RFC-4180-style reader (quoted fields, doubled quotes); one header line.
CsvTable read_csv_table(const std::filesystem::path& path);

}  // namespace peh
