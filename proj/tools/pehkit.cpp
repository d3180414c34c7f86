// pehkit: batch driver for the piezoelectric-harvester bearing-diagnosis
// toolkit. Subcommands cover the full pipeline: simulate raw voltage
// traces, build energy feature tables, emit perturbed copies of scarce
// events, run the complete study grid, score events against a healthy-only
// energy model, and redraw the SVG charts from existing CSV artifacts.
//
// Exit codes: 0 success, 1 configuration/usage error, 2 when the study ran
// but some grid cells failed.
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "peh/config.hpp"
#include "peh/dataset.hpp"
#include "peh/harvester.hpp"
#include "peh/parallel.hpp"
#include "peh/seh.hpp"
#include "peh/study.hpp"
#include "peh/trace_io.hpp"

namespace fs = std::filesystem;
using namespace peh;

namespace {

std::string g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Filesystem-safe stand-in for a free-form source id.
std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s)
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_')
               ? ch
               : '-';
  return out.empty() ? std::string("trace") : out;
}

int cmd_simulate(const ExperimentConfig& config) {
  const std::vector<AccelerationTrace> traces = load_source_traces(config);
  const std::vector<HarvesterDesign> bank = config.selected_devices();
  const bool seh = config.circuit.kind == CircuitKind::seh;
  const fs::path dir = config.output_dir / "traces";
  fs::create_directories(dir);

  struct Job {
    std::string file;
    VoltageTrace voltage;
  };
  std::vector<Job> jobs_out(bank.size() * traces.size());
  parallel_for(jobs_out.size(), config.jobs, [&](std::size_t task) {
    const HarvesterDesign& dev = bank[task / traces.size()];
    const AccelerationTrace& trace = traces[task % traces.size()];
    Job& job = jobs_out[task];
    job.file = dev.name + "_" + sanitize(trace.source_id) +
               (seh ? "_capacitor_v.csv" : "_voltage.csv");
    if (seh)
      job.voltage = simulate_seh(dev, config.circuit.seh, trace).capacitor_voltage;
    else
      job.voltage = simulate_resistive(dev, trace);
  });

  std::ofstream index(config.output_dir / "simulate_index.csv", std::ios::binary);
  index << "device,source,label,samples,file\n";
  for (std::size_t task = 0; task < jobs_out.size(); ++task) {
    const AccelerationTrace& trace = traces[task % traces.size()];
    write_trace_csv(dir / jobs_out[task].file, jobs_out[task].voltage);
    index << bank[task / traces.size()].name << "," << trace.source_id << ","
          << trace.label.value_or(0) << "," << jobs_out[task].voltage.size() << ",traces/"
          << jobs_out[task].file << "\n";
  }
  std::printf("simulate: wrote %zu traces for %zu devices x %zu sources under %s\n",
              jobs_out.size(), bank.size(), traces.size(), config.output_dir.c_str());
  return 0;
}

int cmd_featurize(const ExperimentConfig& config) {
  const std::vector<AccelerationTrace> traces = load_source_traces(config);
  const std::vector<HarvesterDesign> bank = config.selected_devices();
  fs::create_directories(config.output_dir);

  std::size_t written = 0;
  for (double window_s : config.windows.lengths_s) {
    FeatureBuildOptions opt;
    opt.circuit = config.circuit.kind;
    opt.window_s = window_s;
    if (opt.circuit == CircuitKind::seh) {
      opt.time_points_s = config.windows.time_points_s;
      opt.seh = config.circuit.seh;
    }
    opt.jobs = config.jobs;

    std::vector<EnergyFeatureTable> singles;
    for (const HarvesterDesign& d : bank) {
      singles.push_back(
          build_feature_table(traces, std::span<const HarvesterDesign>(&d, 1), opt));
      write_feature_csv(
          config.output_dir / ("features_w" + g12(window_s) + "_" + d.name + ".csv"),
          singles.back());
      ++written;
    }
    if (bank.size() > 1) {
      write_feature_csv(config.output_dir / ("features_w" + g12(window_s) + "_fused.csv"),
                        fuse(singles));
      ++written;
    }
  }
  std::printf("featurize: wrote %zu feature tables under %s\n", written,
              config.output_dir.c_str());
  return 0;
}

int cmd_augment(const ExperimentConfig& config) {
  if (!config.augmentation.enabled)
    throw ConfigError("augmentation.enabled: the augment command needs augmentation enabled");
  const std::vector<AccelerationTrace> traces = load_source_traces(config);

  std::size_t written = 0;
  for (double window_s : config.windows.lengths_s) {
    const std::vector<EventRecord> events = cut_events(traces, window_s);
    const std::vector<AugmentedEvent> augmented =
        augment_events(events, config.augmentation, config.jobs);

    const fs::path dir = config.output_dir / ("augmented_w" + g12(window_s));
    fs::create_directories(dir);
    std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
    manifest << "file,label,seed_event,beta,rng_seed\n";
    for (const AugmentedEvent& ev : augmented) {
      const std::string file = sanitize(ev.window.source_id) + ".csv";
      write_trace_csv(dir / file, ev.window);
      manifest << file << "," << ev.label << "," << ev.seed_event_id << ","
               << g17(config.augmentation.beta) << "," << ev.rng_seed << "\n";
      ++written;
    }
  }
  std::printf("augment: wrote %zu perturbed event traces under %s\n", written,
              config.output_dir.c_str());
  return 0;
}

int cmd_study(const ExperimentConfig& config) {
  const StudyResult result = run_study(config);
  write_study_artifacts(result, config.output_dir);
  render_report_charts(config.output_dir);
  const std::size_t failed = result.failed_cells();
  std::printf("study: %zu cells (%zu failed), artifacts under %s\n", result.cells.size(),
              failed, config.output_dir.c_str());
  if (failed) {
    for (const CellResult& cell : result.cells)
      if (!cell.ok)
        std::fprintf(stderr, "cell %s failed: %s\n", cell.cell.slug().c_str(),
                     cell.error.c_str());
    return 2;
  }
  return 0;
}

int cmd_anomaly(const ExperimentConfig& config) {
  if (!config.anomaly.enabled)
    throw ConfigError("anomaly.enabled: the anomaly command needs anomaly detection enabled");
  const std::vector<AccelerationTrace> traces = load_source_traces(config);
  const AnomalyReport report = run_anomaly(config, traces);
  write_anomaly_artifacts(report, config.output_dir);
  render_report_charts(config.output_dir);
  std::size_t alarms = 0;
  for (const AnomalyEventRow& row : report.events)
    if (row.alarm) ++alarms;
  std::printf("anomaly: scored %zu events on %s (%zu alarms), artifacts under %s\n",
              report.events.size(), report.device.c_str(), alarms, config.output_dir.c_str());
  return 0;
}

int cmd_report(const fs::path& dir) {
  render_report_charts(dir);
  std::size_t svgs = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".svg") ++svgs;
  std::printf("report: %zu charts under %s\n", svgs, dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Bearing-health studies on simulated piezoelectric-harvester energy features"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int jobs = 0;

  struct Sub {
    CLI::App* app;
    bool needs_config;
  };
  std::map<std::string, Sub> subs;
  auto add = [&](const std::string& name, const std::string& help, bool needs_config) {
    CLI::App* sub = app.add_subcommand(name, help);
    CLI::Option* cfg = sub->add_option("--config", config_path, "experiment config (YAML)");
    if (needs_config) cfg->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "global seed (overrides the config)");
    sub->add_option("--jobs", jobs, "worker threads (overrides the config)");
    subs[name] = {sub, needs_config};
  };
  add("simulate", "simulate harvester output for every (device, source trace)", true);
  add("featurize", "build per-device and fused energy feature tables", true);
  add("augment", "write orthonormal-frame-perturbed copies of windowed events", true);
  add("study", "run the full device/window/classifier grid and write all artifacts", true);
  add("anomaly", "fit the healthy-energy model and score every event", true);
  add("report", "redraw SVG charts from the CSV artifacts in --out", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "report") {
      fs::path dir;
      if (!out_dir.empty())
        dir = out_dir;
      else if (!config_path.empty())
        dir = load_config(config_path).output_dir;
      else
        throw ConfigError("report needs --out or --config");
      return cmd_report(dir);
    }

    ExperimentConfig config = load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (subs[name].app->count("--seed")) config.seed = seed;
    if (subs[name].app->count("--jobs")) config.jobs = jobs;
    config.validate();

    if (name == "simulate") return cmd_simulate(config);
    if (name == "featurize") return cmd_featurize(config);
    if (name == "augment") return cmd_augment(config);
    if (name == "study") return cmd_study(config);
    if (name == "anomaly") return cmd_anomaly(config);
    std::fprintf(stderr, "unknown subcommand %s\n", name.c_str());
    return 1;
  } catch (const ConfigError& ex) {
    std::fprintf(stderr, "config error: %s\n", ex.what());
    return 1;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
}
