#include "peh/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "peh/parallel.hpp"
#include "peh/rng.hpp"
#include "peh/signal.hpp"

namespace peh {
namespace {

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void EnergyFeatureTable::validate() const {
  for (const FeatureRow& r : rows) {
    if (r.label < 1 || r.label > 10)
      throw std::invalid_argument("EnergyFeatureTable: label outside 1..10");
    if (r.features.size() != feature_names.size())
      throw std::invalid_argument("EnergyFeatureTable: inconsistent feature dimensionality");
    for (double f : r.features)
      if (!std::isfinite(f) || f < 0.0)
        throw std::invalid_argument("EnergyFeatureTable: features must be finite and >= 0");
  }
}

int FoldAssignment::fold(std::int64_t event_id) const {
  const auto it = fold_of.find(event_id);
  if (it == fold_of.end())
    throw std::invalid_argument("FoldAssignment: unknown event " + std::to_string(event_id));
  return it->second;
}

void SyntheticFaultSpec::validate() const {
  if (!(duration_s > 0.0) || !(sample_rate_hz > 0.0))
    throw std::invalid_argument("SyntheticFaultSpec: duration and sample rate must be > 0");
  if (label < 1 || label > 10)
    throw std::invalid_argument("SyntheticFaultSpec: label outside 1..10");
  if (noise_rms < 0.0) throw std::invalid_argument("SyntheticFaultSpec: negative noise RMS");
  for (const Tone& t : tones) {
    if (!(t.frequency_hz > 0.0) || t.frequency_hz >= sample_rate_hz / 2.0)
      throw std::invalid_argument("SyntheticFaultSpec: tone frequency must be below Nyquist");
    if (t.amplitude < 0.0) throw std::invalid_argument("SyntheticFaultSpec: negative amplitude");
  }
}

AccelerationTrace synth_trace(const SyntheticFaultSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
  if (n == 0) throw std::invalid_argument("synth_trace: zero-length spec");

  // Phases first (one per tone, in order), then noise; fixed draw order.
  std::vector<double> phases(spec.tones.size());
  for (double& p : phases) p = 2.0 * std::numbers::pi * uniform01(rng);

  AccelerationTrace trace;
  trace.sample_rate = spec.sample_rate_hz;
  trace.label = spec.label;
  trace.source_id = "synth-label" + std::to_string(spec.label);
  trace.samples.assign(n, 0.0);

  const double dt = 1.0 / spec.sample_rate_hz;
  for (std::size_t ti = 0; ti < spec.tones.size(); ++ti) {
    const Tone& tone = spec.tones[ti];
    const double w = 2.0 * std::numbers::pi * tone.frequency_hz;
    for (std::size_t k = 0; k < n; ++k)
      trace.samples[k] += tone.amplitude * std::sin(w * static_cast<double>(k) * dt + phases[ti]);
  }
  if (spec.noise_rms > 0.0) {
    NormalSampler normal;
    for (std::size_t k = 0; k < n; ++k) trace.samples[k] += spec.noise_rms * normal(rng);
  }
  return trace;
}

std::vector<SyntheticFaultSpec> benchmark_fault_specs(double duration_s, double sample_rate_hz,
                                                      double base_amplitude, double noise_rms) {
  // Per-device label contrast; device 9 is the most discriminative, device 3
  // (50 Hz) the least, mirroring the tuned/detuned device narrative.
  static const double kGap[10] = {0.25, 0.30, 0.15, 0.45, 0.35, 0.30, 0.20, 0.50, 0.90, 0.40};
  const std::vector<HarvesterDesign> bank = default_device_bank();

  std::vector<SyntheticFaultSpec> specs;
  specs.reserve(10);
  for (int label = 1; label <= 10; ++label) {
    SyntheticFaultSpec spec;
    spec.duration_s = duration_s;
    spec.sample_rate_hz = sample_rate_hz;
    spec.label = label;
    spec.noise_rms = noise_rms;
    for (int d = 0; d < 10; ++d) {
      // (device, label) -> amplitude through a modular pattern: every label
      // looks similar on any single device but the joint pattern is unique.
      const int perm = ((d + 1) * label) % 11 - 1;
      Tone tone;
      tone.frequency_hz = bank[static_cast<std::size_t>(d)].natural_frequencies_hz[0];
      tone.amplitude =
          base_amplitude * (1.0 + kGap[d] * static_cast<double>(perm) / 9.0);
      spec.tones.push_back(tone);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

EnergyFeatureTable build_feature_table(std::span<const AccelerationTrace> traces,
                                       std::span<const HarvesterDesign> devices,
                                       const FeatureBuildOptions& options) {
  if (traces.empty()) throw std::invalid_argument("build_feature_table: no traces");
  if (devices.empty()) throw std::invalid_argument("build_feature_table: no devices");
  if (!(options.window_s > 0.0))
    throw std::invalid_argument("build_feature_table: window must be > 0");
  for (const HarvesterDesign& d : devices) d.validate();
  if (options.circuit == CircuitKind::seh) {
    options.seh.validate();
    if (options.time_points_s.empty())
      throw std::invalid_argument("build_feature_table: SEH needs at least one time point");
    for (double t : options.time_points_s)
      if (!(t > 0.0) || t > options.window_s)
        throw std::invalid_argument("build_feature_table: time points must lie in (0, window]");
  }
  for (const AccelerationTrace& t : traces) {
    t.validate();
    if (!t.label) throw std::invalid_argument("build_feature_table: unlabeled trace");
  }

  // Events grouped by ascending label, then input order, then window order.
  struct Event {
    std::int64_t id;
    int label;
    AccelerationTrace window;
    std::string source;
  };
  std::map<int, std::vector<const AccelerationTrace*>> by_label;
  for (const AccelerationTrace& t : traces) by_label[*t.label].push_back(&t);

  std::vector<Event> events;
  for (const auto& [label, group] : by_label) {
    if (group.size() > 100)
      throw std::invalid_argument("build_feature_table: label " + std::to_string(label) +
                                  " has more than 100 traces; event ids would collide");
    for (std::size_t ti = 0; ti < group.size(); ++ti) {
      std::vector<AccelerationTrace> wins = window_events(*group[ti], options.window_s);
      if (wins.size() > 10000)
        throw std::invalid_argument("build_feature_table: trace " + group[ti]->source_id +
                                    " yields more than 10000 windows; event ids would collide");
      for (std::size_t wi = 0; wi < wins.size(); ++wi) {
        Event ev;
        ev.id = static_cast<std::int64_t>(label) * 1000000 +
                static_cast<std::int64_t>(ti) * 10000 + static_cast<std::int64_t>(wi);
        ev.label = label;
        ev.source = group[ti]->source_id + ";win=" + std::to_string(wi);
        ev.window = std::move(wins[wi]);
        events.push_back(std::move(ev));
      }
    }
  }

  const bool seh = options.circuit == CircuitKind::seh;
  const std::size_t points = seh ? options.time_points_s.size() : 1;
  const std::size_t dim = devices.size() * points;

  EnergyFeatureTable table;
  table.feature_names.reserve(dim);
  std::string device_list;
  for (const HarvesterDesign& d : devices) {
    if (!device_list.empty()) device_list += "+";
    device_list += d.name;
    if (seh) {
      for (double tp : options.time_points_s)
        table.feature_names.push_back(d.name + "_J@" + format_g(tp) + "s");
    } else {
      table.feature_names.push_back(d.name + "_J");
    }
  }
  std::string prov_base = device_list + ";" + (seh ? "seh" : "resistive") +
                          ";dt=" + format_g(options.window_s);
  if (seh) {
    prov_base += ";tp=";
    for (std::size_t i = 0; i < options.time_points_s.size(); ++i) {
      if (i) prov_base += ",";
      prov_base += format_g(options.time_points_s[i]);
    }
  }

  table.rows.resize(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) {
    table.rows[e].event_id = events[e].id;
    table.rows[e].label = events[e].label;
    table.rows[e].features.assign(dim, 0.0);
    table.rows[e].provenance = prov_base + ";src=" + events[e].source;
  }

  const std::size_t ndev = devices.size();
  parallel_for(events.size() * ndev, options.jobs, [&](std::size_t task) {
    const std::size_t e = task / ndev;
    const std::size_t d = task % ndev;
    const Event& ev = events[e];
    const HarvesterDesign& dev = devices[d];
    try {
      if (seh) {
        const SehRunResult run = simulate_seh(dev, options.seh, ev.window);
        const std::vector<double> es = energy_at_times(
            run.capacitor_voltage, options.seh.storage_capacitance_f, options.time_points_s);
        for (std::size_t p = 0; p < points; ++p)
          table.rows[e].features[d * points + p] = es[p];
      } else {
        const VoltageTrace v = simulate_resistive(dev, ev.window);
        table.rows[e].features[d] = energy_time_domain(v, dev.load_resistance_ohm);
      }
    } catch (const std::exception& ex) {
      throw std::runtime_error("device=" + dev.name + " event=" + std::to_string(ev.id) + ": " +
                               ex.what());
    }
  });

  table.validate();
  return table;
}

EnergyFeatureTable fuse(std::span<const EnergyFeatureTable> tables) {
  if (tables.empty()) throw std::invalid_argument("fuse: no tables");
  EnergyFeatureTable out = tables[0];
  for (std::size_t ti = 1; ti < tables.size(); ++ti) {
    const EnergyFeatureTable& t = tables[ti];
    if (t.rows.size() != out.rows.size())
      throw std::invalid_argument("fuse: event mismatch (row counts differ)");
    std::unordered_map<std::int64_t, const FeatureRow*> index;
    index.reserve(t.rows.size());
    for (const FeatureRow& r : t.rows) index[r.event_id] = &r;
    for (FeatureRow& r : out.rows) {
      const auto it = index.find(r.event_id);
      if (it == index.end())
        throw std::invalid_argument("fuse: event mismatch (missing " +
                                    std::to_string(r.event_id) + ")");
      if (it->second->label != r.label)
        throw std::invalid_argument("fuse: label mismatch for event " +
                                    std::to_string(r.event_id));
      r.features.insert(r.features.end(), it->second->features.begin(),
                        it->second->features.end());
      if (!it->second->provenance.empty())
        r.provenance += r.provenance.empty() ? it->second->provenance
                                             : "|" + it->second->provenance;
    }
    out.feature_names.insert(out.feature_names.end(), t.feature_names.begin(),
                             t.feature_names.end());
  }
  out.validate();
  return out;
}

FoldAssignment kfold_split(const EnergyFeatureTable& table, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("kfold_split: need at least 2 folds");
  table.validate();

  std::map<int, std::vector<std::int64_t>> by_label;
  for (const FeatureRow& r : table.rows) by_label[r.label].push_back(r.event_id);
  for (const auto& [label, ids] : by_label)
    if (ids.size() < static_cast<std::size_t>(folds))
      throw std::invalid_argument("kfold_split: label " + std::to_string(label) +
                                  " has fewer rows than folds");

  std::mt19937_64 rng = make_rng(seed);
  FoldAssignment fa;
  fa.fold_count = folds;
  // Rolling fold counter across label groups keeps overall fold sizes within
  // one of each other even when per-label leftovers exist.
  std::size_t counter = 0;
  for (auto& [label, ids] : by_label) {
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(ids[i], ids[j]);
    }
    for (std::int64_t id : ids) {
      fa.fold_of[id] = static_cast<int>(counter % static_cast<std::size_t>(folds));
      ++counter;
    }
  }
  return fa;
}

void write_feature_csv(const std::filesystem::path& path, const EnergyFeatureTable& table) {
  table.validate();
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::fprintf(f, "event_id,label");
  for (std::size_t i = 0; i < table.feature_dim(); ++i) std::fprintf(f, ",f%zu", i);
  std::fprintf(f, "\n");
  for (const FeatureRow& r : table.rows) {
    std::fprintf(f, "%lld,%d", static_cast<long long>(r.event_id), r.label);
    for (double v : r.features) std::fprintf(f, ",%.17g", v);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

EnergyFeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("event_id,label", 0) != 0)
    throw std::runtime_error(path.string() + ": expected header 'event_id,label,f0,...'");

  EnergyFeatureTable table;
  {
    std::stringstream header(line);
    std::string col;
    int idx = 0;
    while (std::getline(header, col, ','))
      if (idx++ >= 2) table.feature_names.push_back(col);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    FeatureRow r;
    int idx = 0;
    while (std::getline(row, cell, ',')) {
      if (idx == 0)
        r.event_id = std::stoll(cell);
      else if (idx == 1)
        r.label = std::stoi(cell);
      else
        r.features.push_back(std::stod(cell));
      ++idx;
    }
    if (r.features.size() != table.feature_dim())
      throw std::runtime_error(path.string() + ": wrong column count at line " +
                               std::to_string(lineno));
    table.rows.push_back(std::move(r));
  }
  table.validate();
  return table;
}

}  // namespace peh
