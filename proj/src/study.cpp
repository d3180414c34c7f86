#include "peh/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "peh/harvester.hpp"
#include "peh/mat5.hpp"
#include "peh/parallel.hpp"
#include "peh/rng.hpp"
#include "peh/seh.hpp"
#include "peh/signal.hpp"
#include "peh/stiefel.hpp"
#include "peh/svg.hpp"
#include "peh/trace_io.hpp"

namespace peh {
namespace {

namespace fs = std::filesystem;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Human-facing number (window lengths, time points): shortest form that
// still distinguishes deliberately different config values.
std::string g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("short write to " + path.string());
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

// Position of `key` in `keys`, appending it on first sight.
std::size_t index_of(std::vector<std::string>& keys, const std::string& key) {
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i] == key) return i;
  keys.push_back(key);
  return keys.size() - 1;
}

// The scalar energy feature summarizing one device: resistive designs have a
// single dissipated-energy column; storage designs use the last checkpoint.
std::size_t energy_slot_within_device(const ExperimentConfig& config) {
  if (config.circuit.kind == CircuitKind::resistive) return 0;
  return config.windows.time_points_s.size() - 1;
}

FeatureBuildOptions feature_options(const ExperimentConfig& config, double window_s) {
  FeatureBuildOptions opt;
  opt.circuit = config.circuit.kind;
  opt.window_s = window_s;
  if (config.circuit.kind == CircuitKind::seh) {
    opt.time_points_s = config.windows.time_points_s;
    opt.seh = config.circuit.seh;
  }
  opt.jobs = config.jobs;
  return opt;
}

// Source tag carried in row provenance, e.g. "...;src=synth-l3-t0;win=2".
std::string provenance_source(const std::string& provenance) {
  const std::size_t pos = provenance.rfind(";src=");
  return pos == std::string::npos ? provenance : provenance.substr(pos + 5);
}

}  // namespace

// ---------------------------------------------------------------------------
// line fit

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  LineFit fit;
  if (n == 0) return fit;

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) {
    fit.intercept = my;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

// ---------------------------------------------------------------------------
// source corpus

std::vector<AccelerationTrace> load_source_traces(const ExperimentConfig& config) {
  std::vector<AccelerationTrace> traces;

  if (config.source.kind == SourceKind::synthetic) {
    const SyntheticSourceConfig& s = config.source.synthetic;
    const std::vector<SyntheticFaultSpec> specs = benchmark_fault_specs(
        s.duration_s, s.sample_rate_hz, s.base_amplitude_ms2, s.noise_rms_ms2);
    for (const SyntheticFaultSpec& spec : specs)
      for (int k = 0; k < s.traces_per_label; ++k) {
        std::mt19937_64 rng =
            make_rng(config.seed, static_cast<std::uint64_t>(spec.label) * 4096 +
                                      static_cast<std::uint64_t>(k));
        AccelerationTrace t = synth_trace(spec, rng);
        t.source_id = "synth-l" + std::to_string(spec.label) + "-t" + std::to_string(k);
        traces.push_back(std::move(t));
      }
    return traces;
  }

  const bool is_mat = config.source.kind == SourceKind::mat_dir;
  const fs::path dir = is_mat ? config.source.mat_dir : config.source.csv_dir;
  CsvTable manifest;
  try {
    manifest = read_csv_table(config.source.labels_csv);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("source.labels_csv: ") + ex.what());
  }
  std::size_t file_col = 0, label_col = 0;
  try {
    file_col = manifest.col("file");
    label_col = manifest.col("label");
  } catch (const std::invalid_argument&) {
    throw ConfigError("source.labels_csv: manifest needs 'file' and 'label' columns");
  }
  std::size_t var_col = manifest.header.size();  // optional, MAT only
  for (std::size_t i = 0; i < manifest.header.size(); ++i)
    if (manifest.header[i] == "variable") var_col = i;

  for (std::size_t r = 0; r < manifest.rows.size(); ++r) {
    const std::vector<std::string>& row = manifest.rows[r];
    const std::string where = "source.labels_csv row " + std::to_string(r + 2);
    if (row.size() < manifest.header.size()) throw ConfigError(where + ": too few fields");
    const std::string& file = row[file_col];
    int label = 0;
    try {
      label = std::stoi(row[label_col]);
    } catch (const std::exception&) {
      throw ConfigError(where + ": label is not an integer: '" + row[label_col] + "'");
    }
    if (label < 1) throw ConfigError(where + ": label must be >= 1");
    try {
      if (is_mat) {
        const std::string pattern = var_col < row.size() ? row[var_col] : "";
        AccelerationTrace t =
            read_mat_trace(dir / file, pattern, config.source.mat_rate_hz, label);
        t.source_id = file;
        traces.push_back(std::move(t));
      } else {
        traces.push_back(read_trace_csv(dir / file, label));
      }
    } catch (const std::exception& ex) {
      throw ConfigError(where + " (" + file + "): " + ex.what());
    }
  }
  if (traces.empty()) throw ConfigError("source.labels_csv: manifest lists no traces");
  return traces;
}

// ---------------------------------------------------------------------------
// events and augmentation

std::vector<EventRecord> cut_events(std::span<const AccelerationTrace> traces, double window_s) {
  std::map<int, std::vector<const AccelerationTrace*>> by_label;
  for (const AccelerationTrace& t : traces) {
    if (!t.label) throw std::invalid_argument("cut_events: trace without a label");
    by_label[*t.label].push_back(&t);
  }

  std::vector<EventRecord> events;
  for (const auto& [label, group] : by_label) {
    if (group.size() > 100)
      throw std::invalid_argument("cut_events: label " + std::to_string(label) +
                                  " has more than 100 traces; event ids would collide");
    for (std::size_t ti = 0; ti < group.size(); ++ti) {
      std::vector<AccelerationTrace> wins = window_events(*group[ti], window_s);
      if (wins.size() > 10000)
        throw std::invalid_argument("cut_events: trace " + group[ti]->source_id +
                                    " yields more than 10000 windows; event ids would collide");
      for (std::size_t wi = 0; wi < wins.size(); ++wi) {
        EventRecord ev;
        ev.event_id = static_cast<std::int64_t>(label) * 1000000 +
                      static_cast<std::int64_t>(ti) * 10000 + static_cast<std::int64_t>(wi);
        ev.label = label;
        ev.source = group[ti]->source_id + ";win=" + std::to_string(wi);
        ev.window = std::move(wins[wi]);
        events.push_back(std::move(ev));
      }
    }
  }
  return events;
}

std::vector<AugmentedEvent> augment_events(std::span<const EventRecord> events,
                                           const AugmentConfig& config, int jobs) {
  PerturbationConfig pcfg;
  pcfg.beta = config.beta;
  pcfg.rows = static_cast<std::size_t>(config.rows);
  pcfg.cols = static_cast<std::size_t>(config.cols);
  pcfg.strategy = config.strategy;
  pcfg.validate();

  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < events.size(); ++i) by_label[events[i].label].push_back(i);
  if (by_label.empty()) throw std::invalid_argument("augment_events: no events");

  struct Item {
    std::size_t seed_index;
    int label;
    int k;
    std::uint64_t g;
  };
  std::vector<Item> items;
  for (const auto& [label, indices] : by_label) {
    const auto pool = static_cast<std::size_t>(std::max<double>(
        1.0, std::ceil(config.seed_fraction * static_cast<double>(indices.size()))));
    for (int k = 0; k < config.per_label; ++k)
      items.push_back({indices[static_cast<std::size_t>(k) % std::min(pool, indices.size())],
                       label, k, static_cast<std::uint64_t>(items.size())});
  }

  std::vector<AugmentedEvent> out(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const Item& item = items[i];
    const EventRecord& seed = events[item.seed_index];
    PerturbationConfig local = pcfg;
    local.rng_seed = mix_seed(config.seed, item.g);
    AugmentedEvent& ev = out[i];
    ev.seed_event_id = seed.event_id;
    ev.label = item.label;
    ev.rng_seed = local.rng_seed;
    ev.window.samples = augment(seed.window.samples, local);
    ev.window.sample_rate = seed.window.sample_rate;
    ev.window.label = item.label;
    ev.window.source_id =
        "aug-l" + std::to_string(item.label) + "-k" + std::to_string(item.k);
  });
  return out;
}

// ---------------------------------------------------------------------------
// cross-validation with training-only extras

CvResult cross_validate_with_training_extras(
    ClassifierKind kind, const Hyperparams& hp, std::uint64_t seed,
    const EnergyFeatureTable& base, const EnergyFeatureTable& extras,
    const std::map<std::int64_t, std::int64_t>& extra_seed_of, const FoldAssignment& folds) {
  base.validate();
  extras.validate();
  if (base.feature_dim() != extras.feature_dim())
    throw std::invalid_argument("training extras: feature dimension mismatch");
  if (folds.fold_count < 2) throw std::invalid_argument("training extras: bad fold count");

  // Fold of the event each extra row descends from.
  std::vector<int> extra_fold(extras.rows.size());
  for (std::size_t i = 0; i < extras.rows.size(); ++i) {
    const auto it = extra_seed_of.find(extras.rows[i].event_id);
    if (it == extra_seed_of.end())
      throw std::invalid_argument("training extras: row " +
                                  std::to_string(extras.rows[i].event_id) +
                                  " has no seed-event mapping");
    extra_fold[i] = folds.fold(it->second);
  }

  std::set<int> label_set;
  for (const FeatureRow& r : base.rows) label_set.insert(r.label);
  CvResult result;
  result.confusion.labels.assign(label_set.begin(), label_set.end());
  result.confusion.counts.assign(label_set.size(),
                                 std::vector<std::int64_t>(label_set.size(), 0));

  const auto dim = static_cast<Eigen::Index>(base.feature_dim());
  for (int f = 0; f < folds.fold_count; ++f) {
    std::vector<const FeatureRow*> train;
    std::vector<const FeatureRow*> test;
    for (const FeatureRow& r : base.rows)
      (folds.fold(r.event_id) == f ? test : train).push_back(&r);
    for (std::size_t i = 0; i < extras.rows.size(); ++i)
      if (extra_fold[i] != f) train.push_back(&extras.rows[i]);
    if (test.empty()) continue;
    if (train.empty()) throw std::invalid_argument("training extras: empty training fold");

    Eigen::MatrixXd xtr(static_cast<Eigen::Index>(train.size()), dim);
    std::vector<int> ytr(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      ytr[i] = train[i]->label;
      for (Eigen::Index j = 0; j < dim; ++j)
        xtr(static_cast<Eigen::Index>(i), j) = train[i]->features[static_cast<std::size_t>(j)];
    }
    auto model = make_classifier(kind, hp, seed);
    model->fit(xtr, ytr);

    Eigen::VectorXd xq(dim);
    for (const FeatureRow* r : test) {
      for (Eigen::Index j = 0; j < dim; ++j) xq(j) = r->features[static_cast<std::size_t>(j)];
      result.confusion.add(r->label, model->predict(xq));
    }
  }
  result.accuracy = result.confusion.accuracy();
  return result;
}

// ---------------------------------------------------------------------------
// study grid

std::string StudyCell::slug() const {
  return device_set + "_w" + g12(window_s) + "_" + classifier_name(classifier) +
         (augmented ? "_aug" : "");
}

std::size_t StudyResult::failed_cells() const {
  std::size_t n = 0;
  for (const CellResult& c : cells)
    if (!c.ok) ++n;
  return n;
}

AnomalyReport run_anomaly(const ExperimentConfig& config,
                          std::span<const AccelerationTrace> traces) {
  AnomalyReport report;
  report.enabled = true;
  report.window_s = config.windows.lengths_s.front();
  report.healthy_label = config.anomaly.healthy_label;

  const std::vector<HarvesterDesign> bank = default_device_bank();
  const HarvesterDesign& device =
      bank[static_cast<std::size_t>(config.anomaly.device_index - 1)];
  report.device = device.name;

  const EnergyFeatureTable table = build_feature_table(
      traces, std::span<const HarvesterDesign>(&device, 1),
      feature_options(config, report.window_s));
  const std::size_t slot = energy_slot_within_device(config);

  std::vector<std::size_t> healthy;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    if (table.rows[i].label == config.anomaly.healthy_label) healthy.push_back(i);
  if (healthy.size() < 3)
    throw ConfigError("anomaly: need at least 3 healthy events, got " +
                      std::to_string(healthy.size()));
  const auto n_fit = static_cast<std::size_t>(std::ceil(
      config.anomaly.fit_fraction * static_cast<double>(healthy.size())));
  if (n_fit < 3)
    throw ConfigError("anomaly.fit_fraction: keeps only " + std::to_string(n_fit) +
                      " healthy events for the fit; need at least 3");

  std::vector<double> fit_energies;
  std::set<std::size_t> fit_rows;
  for (std::size_t i = 0; i < n_fit; ++i) {
    fit_rows.insert(healthy[i]);
    fit_energies.push_back(table.rows[healthy[i]].features[slot]);
  }
  try {
    report.model = fit_anomaly(fit_energies, config.anomaly.z_threshold);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("anomaly: ") + ex.what());
  }

  auto add_row = [&](std::size_t i, bool used_for_fit) {
    const FeatureRow& r = table.rows[i];
    AnomalyEventRow row;
    row.event_id = r.event_id;
    row.label = r.label;
    row.source = provenance_source(r.provenance);
    row.energy_j = r.features[slot];
    row.score = anomaly_score(report.model, row.energy_j);
    row.alarm = classify_energy(report.model, row.energy_j) == HealthCall::anomalous;
    row.used_for_fit = used_for_fit;
    report.events.push_back(std::move(row));
  };
  for (std::size_t i = 0; i < n_fit; ++i) add_row(healthy[i], true);
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    if (!fit_rows.count(i)) add_row(i, false);
  return report;
}

StudyResult run_study(const ExperimentConfig& config) {
  config.validate();

  StudyResult result;
  result.version = kToolkitVersion;
  result.fingerprint = config_fingerprint(config);
  result.config = config;

  const std::vector<AccelerationTrace> traces = load_source_traces(config);
  result.trace_count = traces.size();
  for (const AccelerationTrace& t : traces)
    if (t.label) ++result.label_counts[*t.label];

  const std::vector<HarvesterDesign> bank = config.selected_devices();
  for (const HarvesterDesign& d : bank) result.device_names.push_back(d.name);
  const bool seh = config.circuit.kind == CircuitKind::seh;

  // -- frequency responses around each resonance ------------------------
  for (const HarvesterDesign& d : bank) {
    const double fn = d.natural_frequencies_hz.front();
    std::vector<double> freqs;
    for (int k = 0; k <= 100; ++k) freqs.push_back(fn * (0.80 + 0.004 * k));
    const FRFCurve curve = frf(d, freqs);
    for (std::size_t i = 0; i < freqs.size(); ++i)
      result.frf.push_back({d.name, curve.frequencies[i], curve.magnitude[i], curve.phase[i]});
  }

  // -- whole-trace diagnostics ------------------------------------------
  {
    // First trace of each label (input order) carries the plotted curve.
    std::map<int, const AccelerationTrace*> first_of_label;
    for (const AccelerationTrace& t : traces)
      if (t.label && !first_of_label.count(*t.label)) first_of_label[*t.label] = &t;

    struct Diag {
      TraceStat stat;
      std::vector<CurvePoint> curve;
    };
    std::vector<Diag> diags(bank.size() * traces.size());
    parallel_for(diags.size(), config.jobs, [&](std::size_t task) {
      const std::size_t d = task / traces.size();
      const std::size_t ti = task % traces.size();
      const HarvesterDesign& dev = bank[d];
      const AccelerationTrace& trace = traces[ti];

      std::vector<double> cum;
      if (seh) {
        const SehRunResult run = simulate_seh(dev, config.circuit.seh, trace);
        cum.reserve(run.capacitor_voltage.size());
        for (double vc : run.capacitor_voltage.samples)
          cum.push_back(capacitor_energy(vc, config.circuit.seh.storage_capacitance_f));
      } else {
        const VoltageTrace v = simulate_resistive(dev, trace);
        cum = cumulative_energy(v, dev.load_resistance_ohm);
      }
      std::vector<double> t(cum.size());
      for (std::size_t i = 0; i < cum.size(); ++i)
        t[i] = static_cast<double>(i + 1) / trace.sample_rate;

      Diag& diag = diags[task];
      diag.stat.device = dev.name;
      diag.stat.source_id = trace.source_id;
      diag.stat.label = trace.label.value_or(0);
      diag.stat.total_energy_j = cum.empty() ? 0.0 : cum.back();
      diag.stat.fit = fit_line(t, cum);

      const auto it = first_of_label.find(trace.label.value_or(0));
      if (it != first_of_label.end() && it->second == &trace && !cum.empty()) {
        const std::size_t stride = std::max<std::size_t>(1, cum.size() / 160);
        for (std::size_t i = 0; i < cum.size(); i += stride)
          diag.curve.push_back({dev.name, diag.stat.label, t[i], cum[i]});
        if ((cum.size() - 1) % stride != 0)
          diag.curve.push_back({dev.name, diag.stat.label, t.back(), cum.back()});
      }
    });
    for (Diag& d : diags) {
      result.trace_stats.push_back(std::move(d.stat));
      for (CurvePoint& p : d.curve) result.energy_curves.push_back(p);
    }
  }

  // -- feature tables ----------------------------------------------------
  // Shared prep failures are held per window instead of thrown: a window
  // (or its augmentation) that cannot be built fails only its own cells.
  const std::size_t n_windows = config.windows.lengths_s.size();
  std::vector<std::vector<EnergyFeatureTable>> singles(n_windows);
  std::vector<EnergyFeatureTable> fused_tables(n_windows);
  std::vector<FoldAssignment> folds(n_windows);
  std::vector<std::string> window_error(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    try {
      const FeatureBuildOptions opt = feature_options(config, config.windows.lengths_s[w]);
      for (const HarvesterDesign& d : bank)
        singles[w].push_back(
            build_feature_table(traces, std::span<const HarvesterDesign>(&d, 1), opt));
      if (bank.size() > 1) fused_tables[w] = fuse(singles[w]);
      folds[w] = kfold_split(singles[w].front(), config.folds, config.seed);
    } catch (const std::exception& ex) {
      window_error[w] = ex.what();
    }
  }

  // -- augmented twins ---------------------------------------------------
  std::vector<std::vector<EnergyFeatureTable>> aug_singles(n_windows);
  std::vector<EnergyFeatureTable> aug_fused(n_windows);
  std::vector<std::map<std::int64_t, std::int64_t>> aug_seed_of(n_windows);
  std::vector<std::string> aug_error(n_windows);
  if (config.augmentation.enabled) {
    for (std::size_t w = 0; w < n_windows; ++w) {
      if (!window_error[w].empty()) {
        aug_error[w] = window_error[w];
        continue;
      }
      try {
        const double window_s = config.windows.lengths_s[w];
        const std::vector<EventRecord> events = cut_events(traces, window_s);
        const std::vector<AugmentedEvent> augmented =
            augment_events(events, config.augmentation, config.jobs);

        // One carrier trace per label: windowing it recovers each perturbed
        // copy exactly, and keeps the per-label trace count at one.
        std::map<int, AccelerationTrace> carriers;
        std::map<int, int> copies_seen;
        for (const AugmentedEvent& ev : augmented) {
          AccelerationTrace& carrier = carriers[ev.label];
          if (carrier.samples.empty()) {
            carrier.sample_rate = ev.window.sample_rate;
            carrier.label = ev.label;
            carrier.source_id = "aug-l" + std::to_string(ev.label);
          }
          carrier.samples.insert(carrier.samples.end(), ev.window.samples.begin(),
                                 ev.window.samples.end());
          const int k = copies_seen[ev.label]++;
          aug_seed_of[w][static_cast<std::int64_t>(ev.label) * 1000000 + k] =
              ev.seed_event_id;
        }
        std::vector<AccelerationTrace> aug_traces;
        for (auto& [label, carrier] : carriers) aug_traces.push_back(std::move(carrier));

        const FeatureBuildOptions opt = feature_options(config, window_s);
        for (const HarvesterDesign& d : bank)
          aug_singles[w].push_back(
              build_feature_table(aug_traces, std::span<const HarvesterDesign>(&d, 1), opt));
        if (bank.size() > 1) aug_fused[w] = fuse(aug_singles[w]);
      } catch (const std::exception& ex) {
        aug_error[w] = ex.what();
        aug_singles[w].clear();
        aug_seed_of[w].clear();
      }
    }
  }

  // -- event-energy spread (first window) --------------------------------
  if (window_error[0].empty()) {
    const std::size_t slot = energy_slot_within_device(config);
    for (std::size_t d = 0; d < bank.size(); ++d) {
      const EnergyFeatureTable& table = singles[0][d];
      std::map<int, std::vector<double>> per_label;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const FeatureRow& r : table.rows) {
        const double e = r.features[slot];
        per_label[r.label].push_back(e);
        lo = std::min(lo, e);
        hi = std::max(hi, e);
      }
      if (!(hi > lo)) hi = lo + 1.0;
      constexpr int kBins = 12;
      const double width = (hi - lo) / kBins;
      for (const auto& [label, energies] : per_label) {
        std::vector<std::int64_t> counts(kBins, 0);
        double mean = 0.0;
        for (double e : energies) {
          ++counts[std::min<std::size_t>(
              kBins - 1, static_cast<std::size_t>((e - lo) / width))];
          mean += e;
        }
        mean /= static_cast<double>(energies.size());
        double var = 0.0;
        for (double e : energies) var += (e - mean) * (e - mean);
        const double sd =
            energies.size() > 1 ? std::sqrt(var / static_cast<double>(energies.size() - 1)) : 0.0;
        for (int b = 0; b < kBins; ++b)
          result.histogram.push_back(
              {bank[d].name, label, lo + b * width, lo + (b + 1) * width, counts[b]});
        result.cov.push_back({bank[d].name, label, energies.size(), mean, sd,
                              mean > 0.0 ? sd / mean : 0.0});
      }
    }
  }

  // -- classification grid ------------------------------------------------
  struct DeviceSet {
    std::string name;
    std::vector<std::size_t> slots;
  };
  std::vector<DeviceSet> sets;
  for (std::size_t d = 0; d < bank.size(); ++d) sets.push_back({bank[d].name, {d}});
  if (bank.size() > 1) {
    DeviceSet fusedset;
    fusedset.name = "fused";
    for (std::size_t d = 0; d < bank.size(); ++d) fusedset.slots.push_back(d);
    sets.push_back(std::move(fusedset));
  }

  for (std::size_t w = 0; w < n_windows; ++w)
    for (const DeviceSet& set : sets)
      for (ClassifierKind kind : config.classifiers.kinds)
        for (int aug = 0; aug <= (config.augmentation.enabled ? 1 : 0); ++aug) {
          CellResult cell;
          cell.cell.device_set = set.name;
          cell.cell.device_slots = set.slots;
          cell.cell.window_s = config.windows.lengths_s[w];
          cell.cell.classifier = kind;
          cell.cell.augmented = aug != 0;
          result.cells.push_back(std::move(cell));
        }

  auto table_for = [&](const CellResult& cell, bool augmented) -> const EnergyFeatureTable& {
    const std::size_t w = static_cast<std::size_t>(
        std::find(config.windows.lengths_s.begin(), config.windows.lengths_s.end(),
                  cell.cell.window_s) -
        config.windows.lengths_s.begin());
    const auto& pool = augmented ? aug_singles[w] : singles[w];
    if (cell.cell.device_slots.size() == 1) return pool[cell.cell.device_slots.front()];
    return augmented ? aug_fused[w] : fused_tables[w];
  };

  parallel_for(result.cells.size(), config.jobs, [&](std::size_t i) {
    CellResult& cell = result.cells[i];
    const std::size_t w = static_cast<std::size_t>(
        std::find(config.windows.lengths_s.begin(), config.windows.lengths_s.end(),
                  cell.cell.window_s) -
        config.windows.lengths_s.begin());
    const std::uint64_t cell_seed = mix_seed(config.seed, i);
    const std::string& prep_error = cell.cell.augmented && !aug_error[w].empty()
                                        ? aug_error[w]
                                        : window_error[w];
    if (!prep_error.empty()) {
      cell.ok = false;
      cell.error = prep_error;
      return;
    }
    try {
      const EnergyFeatureTable& base = table_for(cell, false);
      cell.events = base.rows.size();
      cell.features = base.feature_dim();
      CvResult cv;
      if (cell.cell.augmented)
        cv = cross_validate_with_training_extras(cell.cell.classifier,
                                                 config.classifiers.hyper, cell_seed, base,
                                                 table_for(cell, true), aug_seed_of[w],
                                                 folds[w]);
      else
        cv = cross_validate(cell.cell.classifier, base, folds[w], config.classifiers.hyper,
                            cell_seed);
      cell.accuracy = cv.accuracy;
      cell.confusion = std::move(cv.confusion);
      cell.ok = true;
    } catch (const std::exception& ex) {
      cell.ok = false;
      cell.error = ex.what();
    }
  });

  if (config.anomaly.enabled) result.anomaly = run_anomaly(config, traces);
  return result;
}

// ---------------------------------------------------------------------------
// artifacts

void write_anomaly_artifacts(const AnomalyReport& report, const fs::path& dir) {
  fs::create_directories(dir);

  {
    std::ostringstream o;
    std::size_t fit_events = 0, eval_events = 0, eval_correct = 0;
    for (const AnomalyEventRow& r : report.events) {
      if (r.used_for_fit) {
        ++fit_events;
        continue;
      }
      ++eval_events;
      if (r.alarm == (r.label != report.healthy_label)) ++eval_correct;
    }
    o << "key,value\n"
      << "device," << report.device << "\n"
      << "window_s," << g12(report.window_s) << "\n"
      << "healthy_label," << report.healthy_label << "\n"
      << "z_threshold," << g17(report.model.z_threshold) << "\n"
      << "mean_j," << g17(report.model.mean) << "\n"
      << "std_j," << g17(report.model.stddev) << "\n"
      << "threshold_lo_j,"
      << g17(report.model.mean - report.model.z_threshold * report.model.stddev) << "\n"
      << "threshold_hi_j,"
      << g17(report.model.mean + report.model.z_threshold * report.model.stddev) << "\n"
      << "fit_events," << fit_events << "\n"
      << "total_events," << report.events.size() << "\n"
      << "eval_events," << eval_events << "\n"
      << "eval_accuracy,"
      << g17(eval_events ? static_cast<double>(eval_correct) / static_cast<double>(eval_events)
                         : 0.0)
      << "\n";
    write_text_file(dir / "anomaly_model.csv", o.str());
  }

  {
    std::ostringstream o;
    o << "event_id,label,source,energy_j,score,alarm,role\n";
    for (const AnomalyEventRow& r : report.events)
      o << r.event_id << "," << r.label << "," << csv_escape(r.source) << "," << g17(r.energy_j)
        << "," << g17(r.score) << "," << (r.alarm ? 1 : 0) << ","
        << (r.used_for_fit ? "fit" : "eval") << "\n";
    write_text_file(dir / "anomaly_events.csv", o.str());
  }

  {
    struct Tally {
      std::int64_t events = 0, alarms = 0;
    };
    Tally fit, healthy_eval, fault_total;
    std::map<int, Tally> fault;
    for (const AnomalyEventRow& r : report.events) {
      Tally* t;
      if (r.used_for_fit)
        t = &fit;
      else if (r.label == report.healthy_label)
        t = &healthy_eval;
      else {
        t = &fault[r.label];
        ++fault_total.events;
        if (r.alarm) ++fault_total.alarms;
      }
      ++t->events;
      if (r.alarm) ++t->alarms;
    }
    std::ostringstream o;
    o << "scope,label,events,alarms,alarm_rate\n";
    auto line = [&](const std::string& scope, int label, const Tally& t) {
      o << scope << "," << label << "," << t.events << "," << t.alarms << ","
        << g17(t.events ? static_cast<double>(t.alarms) / static_cast<double>(t.events) : 0.0)
        << "\n";
    };
    line("fit", report.healthy_label, fit);
    line("healthy_eval", report.healthy_label, healthy_eval);
    for (const auto& [label, t] : fault) line("fault", label, t);
    line("fault_total", 0, fault_total);
    write_text_file(dir / "anomaly_summary.csv", o.str());
  }
}

void write_study_artifacts(const StudyResult& result, const fs::path& dir) {
  fs::create_directories(dir);

  {
    std::ostringstream o;
    o << "key,value\n"
      << "toolkit_version," << result.version << "\n"
      << "config_fingerprint," << result.fingerprint << "\n"
      << "seed," << result.config.seed << "\n"
      << "circuit,"
      << (result.config.circuit.kind == CircuitKind::seh ? "seh" : "resistive") << "\n"
      << "source_traces," << result.trace_count << "\n"
      << "labels," << result.label_counts.size() << "\n"
      << "devices," << result.device_names.size() << "\n";
    std::string names;
    for (const std::string& n : result.device_names) names += (names.empty() ? "" : "+") + n;
    o << "device_names," << names << "\n"
      << "windows," << result.config.windows.lengths_s.size() << "\n"
      << "classifiers," << result.config.classifiers.kinds.size() << "\n"
      << "folds," << result.config.folds << "\n"
      << "cells_total," << result.cells.size() << "\n"
      << "cells_failed," << result.failed_cells() << "\n"
      << "augmentation_enabled," << (result.config.augmentation.enabled ? 1 : 0) << "\n"
      << "anomaly_enabled," << (result.anomaly.enabled ? 1 : 0) << "\n";
    write_text_file(dir / "run.csv", o.str());
  }

  {
    std::ostringstream o;
    o << "device_set,window_s,classifier,augmented,status,events,features,folds,accuracy,error\n";
    for (const CellResult& c : result.cells)
      o << c.cell.device_set << "," << g12(c.cell.window_s) << ","
        << classifier_name(c.cell.classifier) << "," << (c.cell.augmented ? 1 : 0) << ","
        << (c.ok ? "ok" : "error") << "," << c.events << "," << c.features << ","
        << result.config.folds << "," << (c.ok ? g17(c.accuracy) : std::string("")) << ","
        << csv_escape(c.error) << "\n";
    write_text_file(dir / "report.csv", o.str());
  }

  for (const CellResult& c : result.cells) {
    if (!c.ok) continue;
    std::ostringstream o;
    o << "true_label";
    for (int l : c.confusion.labels) o << "," << l;
    o << "\n";
    for (std::size_t i = 0; i < c.confusion.labels.size(); ++i) {
      o << c.confusion.labels[i];
      for (std::size_t j = 0; j < c.confusion.labels.size(); ++j)
        o << "," << c.confusion.counts[i][j];
      o << "\n";
    }
    write_text_file(dir / ("confusion_" + c.cell.slug() + ".csv"), o.str());
  }

  {
    std::ostringstream o;
    o << "device,source_id,label,total_energy_j,slope_w,intercept_j,r2\n";
    for (const TraceStat& s : result.trace_stats)
      o << s.device << "," << csv_escape(s.source_id) << "," << s.label << ","
        << g17(s.total_energy_j) << "," << g17(s.fit.slope) << "," << g17(s.fit.intercept) << ","
        << g17(s.fit.r2) << "\n";
    write_text_file(dir / "slopes.csv", o.str());
  }

  {
    std::ostringstream o;
    o << "device,label,t_s,energy_j\n";
    for (const CurvePoint& p : result.energy_curves)
      o << p.device << "," << p.label << "," << g17(p.t_s) << "," << g17(p.energy_j) << "\n";
    write_text_file(dir / "energy_curves.csv", o.str());
  }

  {
    std::ostringstream o;
    o << "device,label,bin_lo_j,bin_hi_j,count\n";
    for (const HistogramBin& b : result.histogram)
      o << b.device << "," << b.label << "," << g17(b.lo_j) << "," << g17(b.hi_j) << ","
        << b.count << "\n";
    write_text_file(dir / "histogram.csv", o.str());
  }

  {
    std::ostringstream o;
    o << "device,label,events,mean_j,std_j,cov\n";
    for (const CovRow& r : result.cov)
      o << r.device << "," << r.label << "," << r.events << "," << g17(r.mean_j) << ","
        << g17(r.std_j) << "," << g17(r.cov) << "\n";
    write_text_file(dir / "cov.csv", o.str());
  }

  {
    std::ostringstream o;
    o << "device,freq_hz,magnitude_v_per_ms2,phase_rad\n";
    for (const FrfPoint& p : result.frf)
      o << p.device << "," << g17(p.freq_hz) << "," << g17(p.magnitude) << ","
        << g17(p.phase_rad) << "\n";
    write_text_file(dir / "frf.csv", o.str());
  }

  if (result.anomaly.enabled) write_anomaly_artifacts(result.anomaly, dir);

  write_text_file(dir / "config_resolved.yaml", serialize_config(result.config));
}

// ---------------------------------------------------------------------------
// CSV reader

std::size_t CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("csv: no column '" + name + "'");
}

CsvTable read_csv_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool pending = false;  // field content or separators seen on this record

  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&]() {
    if (pending || !record.empty()) {
      end_field();
      records.push_back(std::move(record));
      record.clear();
    }
    pending = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"': quoted = true; pending = true; break;
      case ',': end_field(); pending = true; break;
      case '\r': break;
      case '\n': end_record(); break;
      default: field += ch; pending = true;
    }
  }
  if (quoted) throw std::runtime_error(path.string() + ": unterminated quoted field");
  end_record();

  if (records.empty()) throw std::runtime_error(path.string() + ": empty CSV");
  CsvTable table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  return table;
}

// ---------------------------------------------------------------------------
// charts from artifacts

namespace {

void chart_accuracy(const fs::path& dir) {
  const fs::path src = dir / "report.csv";
  if (!fs::exists(src)) return;
  const CsvTable t = read_csv_table(src);
  const std::size_t c_set = t.col("device_set"), c_win = t.col("window_s"),
                    c_clf = t.col("classifier"), c_aug = t.col("augmented"),
                    c_status = t.col("status"), c_acc = t.col("accuracy");

  std::vector<std::string> windows;
  for (const auto& row : t.rows) index_of(windows, row[c_win]);

  for (const std::string& win : windows) {
    std::vector<std::string> sets, series;
    std::map<std::pair<std::size_t, std::size_t>, double> value;
    for (const auto& row : t.rows) {
      if (row[c_win] != win) continue;
      const std::size_t si = index_of(sets, row[c_set]);
      const std::string clf = row[c_clf] + (row[c_aug] == "1" ? " (aug)" : "");
      const std::size_t ci = index_of(series, clf);
      value[{si, ci}] = row[c_status] == "ok" ? to_double(row[c_acc])
                                              : std::numeric_limits<double>::quiet_NaN();
    }
    BarChart chart;
    chart.title = "classification accuracy, window " + win + " s";
    chart.y_label = "accuracy";
    chart.series_names = series;
    for (std::size_t si = 0; si < sets.size(); ++si) {
      BarGroup g;
      g.label = sets[si];
      for (std::size_t ci = 0; ci < series.size(); ++ci) {
        const auto it = value.find({si, ci});
        g.values.push_back(it == value.end() ? std::numeric_limits<double>::quiet_NaN()
                                             : it->second);
      }
      chart.groups.push_back(std::move(g));
    }
    write_text_file(dir / ("accuracy_w" + win + ".svg"), render_bar_chart(chart));
  }
}

void chart_confusions(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("confusion_", 0) == 0 && e.path().extension() == ".csv")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    const CsvTable t = read_csv_table(f);
    Heatmap map;
    map.title = f.stem().string();
    for (std::size_t j = 1; j < t.header.size(); ++j)
      map.col_labels.push_back("pred " + t.header[j]);
    for (const auto& row : t.rows) {
      map.row_labels.push_back("true " + row.at(0));
      std::vector<double> values;
      for (std::size_t j = 1; j < row.size(); ++j) values.push_back(to_double(row[j]));
      map.values.push_back(std::move(values));
    }
    write_text_file(dir / (f.stem().string() + ".svg"), render_heatmap(map));
  }
}

void chart_frf(const fs::path& dir) {
  const fs::path src = dir / "frf.csv";
  if (!fs::exists(src)) return;
  const CsvTable t = read_csv_table(src);
  const std::size_t c_dev = t.col("device"), c_f = t.col("freq_hz"),
                    c_m = t.col("magnitude_v_per_ms2");
  std::vector<std::string> devices;
  std::vector<Series> series;
  for (const auto& row : t.rows) {
    const std::size_t d = index_of(devices, row[c_dev]);
    if (d == series.size()) {
      series.emplace_back();
      series.back().name = row[c_dev];
    }
    series[d].x.push_back(to_double(row[c_f]));
    series[d].y.push_back(to_double(row[c_m]));
  }
  LineChart chart;
  chart.title = "harvester frequency response";
  chart.x_label = "frequency [Hz]";
  chart.y_label = "|V| per m/s^2";
  chart.series = std::move(series);
  write_text_file(dir / "frf.svg", render_line_chart(chart));
}

void chart_energy_curves(const fs::path& dir) {
  const fs::path src = dir / "energy_curves.csv";
  if (!fs::exists(src)) return;
  const CsvTable t = read_csv_table(src);
  const std::size_t c_dev = t.col("device"), c_l = t.col("label"), c_t = t.col("t_s"),
                    c_e = t.col("energy_j");
  std::vector<std::string> devices;
  for (const auto& row : t.rows) index_of(devices, row[c_dev]);
  for (const std::string& dev : devices) {
    std::vector<std::string> labels;
    std::vector<Series> series;
    for (const auto& row : t.rows) {
      if (row[c_dev] != dev) continue;
      const std::size_t li = index_of(labels, row[c_l]);
      if (li == series.size()) {
        series.emplace_back();
        series.back().name = "label " + row[c_l];
      }
      series[li].x.push_back(to_double(row[c_t]));
      series[li].y.push_back(to_double(row[c_e]));
    }
    LineChart chart;
    chart.title = "cumulative harvested energy, " + dev;
    chart.x_label = "time [s]";
    chart.y_label = "energy [J]";
    chart.series = std::move(series);
    write_text_file(dir / ("energy_curves_" + dev + ".svg"), render_line_chart(chart));
  }
}

void chart_histogram(const fs::path& dir) {
  const fs::path src = dir / "histogram.csv";
  if (!fs::exists(src)) return;
  const CsvTable t = read_csv_table(src);
  const std::size_t c_dev = t.col("device"), c_l = t.col("label"), c_lo = t.col("bin_lo_j"),
                    c_hi = t.col("bin_hi_j"), c_n = t.col("count");
  std::vector<std::string> devices;
  for (const auto& row : t.rows) index_of(devices, row[c_dev]);
  for (const std::string& dev : devices) {
    std::vector<std::string> bins, labels;
    std::map<std::pair<std::size_t, std::size_t>, double> value;
    for (const auto& row : t.rows) {
      if (row[c_dev] != dev) continue;
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.3g",
                    0.5 * (to_double(row[c_lo]) + to_double(row[c_hi])));
      const std::size_t bi = index_of(bins, buf);
      const std::size_t li = index_of(labels, "label " + row[c_l]);
      value[{bi, li}] += to_double(row[c_n]);
    }
    BarChart chart;
    chart.title = "event energy distribution, " + dev;
    chart.y_label = "events";
    chart.series_names = labels;
    for (std::size_t bi = 0; bi < bins.size(); ++bi) {
      BarGroup g;
      g.label = bins[bi];
      for (std::size_t li = 0; li < labels.size(); ++li) {
        const auto it = value.find({bi, li});
        g.values.push_back(it == value.end() ? 0.0 : it->second);
      }
      chart.groups.push_back(std::move(g));
    }
    write_text_file(dir / ("histogram_" + dev + ".svg"), render_bar_chart(chart));
  }
}

void chart_grouped_by_device(const fs::path& dir, const std::string& csv_name,
                             const std::string& value_col, const std::string& title,
                             const std::string& y_label, const std::string& svg_name,
                             bool average) {
  const fs::path src = dir / csv_name;
  if (!fs::exists(src)) return;
  const CsvTable t = read_csv_table(src);
  const std::size_t c_dev = t.col("device"), c_l = t.col("label"), c_v = t.col(value_col);
  std::vector<std::string> devices, labels;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::int64_t>> acc;
  for (const auto& row : t.rows) {
    const std::size_t di = index_of(devices, row[c_dev]);
    const std::size_t li = index_of(labels, "label " + row[c_l]);
    auto& slot = acc[{di, li}];
    slot.first += to_double(row[c_v]);
    ++slot.second;
  }
  BarChart chart;
  chart.title = title;
  chart.y_label = y_label;
  chart.series_names = labels;
  for (std::size_t di = 0; di < devices.size(); ++di) {
    BarGroup g;
    g.label = devices[di];
    for (std::size_t li = 0; li < labels.size(); ++li) {
      const auto it = acc.find({di, li});
      if (it == acc.end())
        g.values.push_back(std::numeric_limits<double>::quiet_NaN());
      else
        g.values.push_back(average ? it->second.first / static_cast<double>(it->second.second)
                                   : it->second.first);
    }
    chart.groups.push_back(std::move(g));
  }
  write_text_file(dir / svg_name, render_bar_chart(chart));
}

void chart_anomaly(const fs::path& dir) {
  const fs::path src = dir / "anomaly_events.csv";
  if (!fs::exists(src)) return;
  const CsvTable t = read_csv_table(src);
  const std::size_t c_score = t.col("score");

  double threshold = 3.0;
  const fs::path model_csv = dir / "anomaly_model.csv";
  if (fs::exists(model_csv)) {
    const CsvTable m = read_csv_table(model_csv);
    const std::size_t ck = m.col("key"), cv = m.col("value");
    for (const auto& row : m.rows)
      if (row[ck] == "z_threshold") threshold = to_double(row[cv]);
  }

  Series score;
  score.name = "score";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    score.x.push_back(static_cast<double>(i));
    score.y.push_back(to_double(t.rows[i][c_score]));
  }
  auto flat = [&](const std::string& name, double v) {
    Series s;
    s.name = name;
    s.x = {0.0, static_cast<double>(t.rows.empty() ? 1 : t.rows.size() - 1)};
    s.y = {v, v};
    return s;
  };
  LineChart chart;
  chart.title = "anomaly scores by event";
  chart.x_label = "event index";
  chart.y_label = "z-score";
  chart.series = {std::move(score), flat("+threshold", threshold),
                  flat("-threshold", -threshold)};
  write_text_file(dir / "anomaly_scores.svg", render_line_chart(chart));
}

}  // namespace

void render_report_charts(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("no such directory: " + dir.string());
  chart_accuracy(dir);
  chart_confusions(dir);
  chart_frf(dir);
  chart_energy_curves(dir);
  chart_histogram(dir);
  chart_grouped_by_device(dir, "cov.csv", "cov", "event-energy coefficient of variation",
                          "std / mean", "cov.svg", false);
  chart_grouped_by_device(dir, "slopes.csv", "slope_w", "mean harvested power per trace",
                          "power [W]", "slopes.svg", true);
  chart_anomaly(dir);
}

}  // namespace peh
