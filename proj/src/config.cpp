#include "peh/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace peh {
namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw ConfigError(path + ": " + why);
}

void check_keys(const YAML::Node& node, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!node.IsDefined() || node.IsNull()) return;
  if (!node.IsMap()) fail(path, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      fail(path + "." + key, "unknown key");
  }
}

// Missing-key lookup that stays safe on undefined/null intermediate nodes.
YAML::Node sub(const YAML::Node& node, const char* key) {
  if (!node.IsDefined() || node.IsNull() || !node.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
  return node[key];
}

template <typename T>
T get_scalar(const YAML::Node& node, const std::string& path, const T& fallback,
             const char* type_name) {
  if (!node.IsDefined() || node.IsNull()) return fallback;
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(path, std::string("expected ") + type_name);
  }
}

double get_double(const YAML::Node& n, const std::string& p, double f) {
  return get_scalar<double>(n, p, f, "a number");
}
int get_int(const YAML::Node& n, const std::string& p, int f) {
  return get_scalar<int>(n, p, f, "an integer");
}
std::uint64_t get_u64(const YAML::Node& n, const std::string& p, std::uint64_t f) {
  return get_scalar<std::uint64_t>(n, p, f, "an unsigned integer");
}
bool get_bool(const YAML::Node& n, const std::string& p, bool f) {
  return get_scalar<bool>(n, p, f, "true/false");
}
std::string get_string(const YAML::Node& n, const std::string& p, const std::string& f) {
  return get_scalar<std::string>(n, p, f, "a string");
}

std::vector<double> get_double_list(const YAML::Node& node, const std::string& path,
                                    std::vector<double> fallback) {
  if (!node.IsDefined() || node.IsNull()) return fallback;
  if (!node.IsSequence()) fail(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(get_double(node[i], path + "[" + std::to_string(i) + "]",
                             std::numeric_limits<double>::quiet_NaN()));
  return out;
}

std::vector<int> get_int_list(const YAML::Node& node, const std::string& path,
                              std::vector<int> fallback) {
  if (!node.IsDefined() || node.IsNull()) return fallback;
  if (!node.IsSequence()) fail(path, "expected a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(get_int(node[i], path + "[" + std::to_string(i) + "]", 0));
  return out;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '\\' || ch == '"') out += '\\';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void ExperimentConfig::validate() const {
  // -- source -----------------------------------------------------------
  switch (source.kind) {
    case SourceKind::synthetic: {
      const SyntheticSourceConfig& s = source.synthetic;
      if (s.traces_per_label < 1) fail("source.synthetic.traces_per_label", "must be >= 1");
      if (!(s.duration_s > 0.0)) fail("source.synthetic.duration_s", "must be > 0");
      if (!(s.sample_rate_hz > 1000.0))
        fail("source.synthetic.sample_rate_hz",
             "must exceed 1000 (the synthetic tone band reaches 500 Hz)");
      if (!(s.base_amplitude_ms2 > 0.0)) fail("source.synthetic.base_amplitude_ms2", "must be > 0");
      if (s.noise_rms_ms2 < 0.0) fail("source.synthetic.noise_rms_ms2", "must be >= 0");
      break;
    }
    case SourceKind::mat_dir:
      if (source.mat_dir.empty()) fail("source.mat_dir", "required when source.kind is mat_dir");
      if (!std::filesystem::is_directory(source.mat_dir))
        fail("source.mat_dir", "not a directory: " + source.mat_dir.string());
      if (source.labels_csv.empty())
        fail("source.labels_csv", "required when source.kind is mat_dir");
      if (!std::filesystem::exists(source.labels_csv))
        fail("source.labels_csv", "no such file: " + source.labels_csv.string());
      if (!(source.mat_rate_hz > 0.0)) fail("source.mat_rate_hz", "must be > 0");
      break;
    case SourceKind::csv_dir:
      if (source.csv_dir.empty()) fail("source.csv_dir", "required when source.kind is csv_dir");
      if (!std::filesystem::is_directory(source.csv_dir))
        fail("source.csv_dir", "not a directory: " + source.csv_dir.string());
      if (source.labels_csv.empty())
        fail("source.labels_csv", "required when source.kind is csv_dir");
      if (!std::filesystem::exists(source.labels_csv))
        fail("source.labels_csv", "no such file: " + source.labels_csv.string());
      break;
  }

  // -- devices ----------------------------------------------------------
  {
    std::set<int> seen;
    for (std::size_t i = 0; i < devices.indices.size(); ++i) {
      const int d = devices.indices[i];
      const std::string path = "devices.indices[" + std::to_string(i) + "]";
      if (d < 1 || d > 10) fail(path, "device index outside 1..10");
      if (!seen.insert(d).second) fail(path, "duplicate device index");
    }
  }

  // -- circuit ----------------------------------------------------------
  try {
    circuit.seh.validate();
  } catch (const std::invalid_argument& ex) {
    fail("circuit.seh", ex.what());
  }

  // -- windows ----------------------------------------------------------
  if (windows.lengths_s.empty()) fail("windows.lengths_s", "need at least one window length");
  {
    std::set<double> seen;
    for (std::size_t i = 0; i < windows.lengths_s.size(); ++i) {
      const double w = windows.lengths_s[i];
      const std::string path = "windows.lengths_s[" + std::to_string(i) + "]";
      if (!(w > 0.0)) fail(path, "must be > 0");
      if (!seen.insert(w).second) fail(path, "duplicate window length");
    }
  }
  if (circuit.kind == CircuitKind::seh) {
    if (windows.time_points_s.empty())
      fail("windows.time_points_s", "the storage circuit needs at least one checkpoint time");
    const double wmin = *std::min_element(windows.lengths_s.begin(), windows.lengths_s.end());
    for (std::size_t i = 0; i < windows.time_points_s.size(); ++i) {
      const double t = windows.time_points_s[i];
      const std::string path = "windows.time_points_s[" + std::to_string(i) + "]";
      if (!(t > 0.0)) fail(path, "must be > 0");
      if (t > wmin)
        fail(path, "exceeds the shortest window (" + fmt_double(wmin) + " s)");
    }
  }

  // -- augmentation -----------------------------------------------------
  if (!(augmentation.beta >= 0.0) || !(augmentation.beta <= 1.0))
    fail("augmentation.beta", "must lie in [0, 1]");
  if (augmentation.rows < 2) fail("augmentation.rows", "must be >= 2");
  if (augmentation.cols < 1) fail("augmentation.cols", "must be >= 1");
  if (augmentation.rows <= augmentation.cols)
    fail("augmentation.rows", "must exceed augmentation.cols (tall reshape matrix)");
  if (augmentation.per_label < 1) fail("augmentation.per_label", "must be >= 1");
  if (augmentation.per_label > 10000) fail("augmentation.per_label", "must be <= 10000");
  if (!(augmentation.seed_fraction > 0.0) || augmentation.seed_fraction > 1.0)
    fail("augmentation.seed_fraction", "must lie in (0, 1]");

  // -- classifiers ------------------------------------------------------
  if (classifiers.kinds.empty()) fail("classifiers.kinds", "need at least one classifier");
  {
    std::set<ClassifierKind> seen;
    for (std::size_t i = 0; i < classifiers.kinds.size(); ++i)
      if (!seen.insert(classifiers.kinds[i]).second)
        fail("classifiers.kinds[" + std::to_string(i) + "]", "duplicate classifier");
  }
  if (classifiers.hyper.knn_k < 1) fail("classifiers.knn_k", "must be >= 1");
  if (classifiers.hyper.rf_trees < 1) fail("classifiers.rf_trees", "must be >= 1");
  if (classifiers.hyper.rf_max_depth < 1) fail("classifiers.rf_max_depth", "must be >= 1");
  if (!(classifiers.hyper.svm_c > 0.0)) fail("classifiers.svm_c", "must be > 0");
  if (classifiers.hyper.svm_epochs < 1) fail("classifiers.svm_epochs", "must be >= 1");
  if (classifiers.hyper.nb_var_floor_rel < 0.0) fail("classifiers.nb_var_floor_rel", "must be >= 0");

  if (folds < 2) fail("folds", "must be >= 2");

  // -- anomaly ----------------------------------------------------------
  if (anomaly.healthy_label < 1 || anomaly.healthy_label > 10)
    fail("anomaly.healthy_label", "must lie in 1..10");
  if (anomaly.device_index < 1 || anomaly.device_index > 10)
    fail("anomaly.device_index", "must lie in 1..10");
  if (!(anomaly.z_threshold > 0.0)) fail("anomaly.z_threshold", "must be > 0");
  if (!(anomaly.fit_fraction > 0.0) || !(anomaly.fit_fraction < 1.0))
    fail("anomaly.fit_fraction", "must lie in (0, 1)");

  if (jobs < 1) fail("jobs", "must be >= 1");
  if (output_dir.empty()) fail("output_dir", "must not be empty");
}

std::vector<HarvesterDesign> ExperimentConfig::selected_devices() const {
  std::vector<HarvesterDesign> bank = default_device_bank();
  if (devices.indices.empty()) return bank;
  std::vector<HarvesterDesign> out;
  out.reserve(devices.indices.size());
  for (int d : devices.indices) out.push_back(bank[static_cast<std::size_t>(d - 1)]);
  return out;
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& ex) {
    throw ConfigError(std::string("config: not parseable as YAML: ") + ex.what());
  }
  if (root.IsNull() || !root.IsDefined()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, "config",
             {"source", "devices", "circuit", "windows", "augmentation", "classifiers", "folds",
              "anomaly", "jobs", "seed", "output_dir"});

  ExperimentConfig cfg;

  {
    const YAML::Node n = root["source"];
    check_keys(n, "source", {"kind", "mat_dir", "csv_dir", "labels_csv", "mat_rate_hz", "synthetic"});
    const std::string kind = get_string(sub(n, "kind"), "source.kind", "synthetic");
    if (kind == "synthetic")
      cfg.source.kind = SourceKind::synthetic;
    else if (kind == "mat_dir")
      cfg.source.kind = SourceKind::mat_dir;
    else if (kind == "csv_dir")
      cfg.source.kind = SourceKind::csv_dir;
    else
      fail("source.kind", "expected synthetic, mat_dir or csv_dir");
    cfg.source.mat_dir = get_string(sub(n, "mat_dir"), "source.mat_dir", "");
    cfg.source.csv_dir = get_string(sub(n, "csv_dir"), "source.csv_dir", "");
    cfg.source.labels_csv = get_string(sub(n, "labels_csv"), "source.labels_csv", "");
    cfg.source.mat_rate_hz = get_double(sub(n, "mat_rate_hz"), "source.mat_rate_hz", 12000.0);

    const YAML::Node s = sub(n, "synthetic");
    check_keys(s, "source.synthetic",
               {"traces_per_label", "duration_s", "sample_rate_hz", "base_amplitude_ms2",
                "noise_rms_ms2"});
    SyntheticSourceConfig& syn = cfg.source.synthetic;
    syn.traces_per_label = get_int(sub(s, "traces_per_label"),
                                   "source.synthetic.traces_per_label", syn.traces_per_label);
    syn.duration_s = get_double(sub(s, "duration_s"), "source.synthetic.duration_s", syn.duration_s);
    syn.sample_rate_hz =
        get_double(sub(s, "sample_rate_hz"), "source.synthetic.sample_rate_hz", syn.sample_rate_hz);
    syn.base_amplitude_ms2 = get_double(sub(s, "base_amplitude_ms2"),
                                        "source.synthetic.base_amplitude_ms2", syn.base_amplitude_ms2);
    syn.noise_rms_ms2 =
        get_double(sub(s, "noise_rms_ms2"), "source.synthetic.noise_rms_ms2", syn.noise_rms_ms2);
  }

  {
    const YAML::Node n = root["devices"];
    check_keys(n, "devices", {"indices"});
    cfg.devices.indices = get_int_list(sub(n, "indices"), "devices.indices", {});
  }

  {
    const YAML::Node n = root["circuit"];
    check_keys(n, "circuit", {"kind", "seh"});
    const std::string kind = get_string(sub(n, "kind"), "circuit.kind", "resistive");
    if (kind == "resistive")
      cfg.circuit.kind = CircuitKind::resistive;
    else if (kind == "seh")
      cfg.circuit.kind = CircuitKind::seh;
    else
      fail("circuit.kind", "expected resistive or seh");

    const YAML::Node s = sub(n, "seh");
    check_keys(s, "circuit.seh",
               {"storage_capacitance_uF", "diode_drop_v", "diode_on_resistance_ohm",
                "rated_voltage_v"});
    SEHParams& p = cfg.circuit.seh;
    p.storage_capacitance_f = 1e-6 * get_double(sub(s, "storage_capacitance_uF"),
                                                "circuit.seh.storage_capacitance_uF",
                                                p.storage_capacitance_f * 1e6);
    p.diode_drop_v = get_double(sub(s, "diode_drop_v"), "circuit.seh.diode_drop_v", p.diode_drop_v);
    p.diode_on_resistance_ohm = get_double(sub(s, "diode_on_resistance_ohm"),
                                           "circuit.seh.diode_on_resistance_ohm",
                                           p.diode_on_resistance_ohm);
    p.rated_voltage_v = get_double(sub(s, "rated_voltage_v"), "circuit.seh.rated_voltage_v",
                                   p.rated_voltage_v);
  }

  {
    const YAML::Node n = root["windows"];
    check_keys(n, "windows", {"lengths_s", "time_points_s"});
    cfg.windows.lengths_s = get_double_list(sub(n, "lengths_s"), "windows.lengths_s", {0.3});
    cfg.windows.time_points_s =
        get_double_list(sub(n, "time_points_s"), "windows.time_points_s", {});
  }

  {
    const YAML::Node n = root["augmentation"];
    check_keys(n, "augmentation",
               {"enabled", "beta", "rows", "cols", "strategy", "per_label", "seed_fraction", "seed"});
    AugmentConfig& a = cfg.augmentation;
    a.enabled = get_bool(sub(n, "enabled"), "augmentation.enabled", a.enabled);
    a.beta = get_double(sub(n, "beta"), "augmentation.beta", a.beta);
    a.rows = get_int(sub(n, "rows"), "augmentation.rows", a.rows);
    a.cols = get_int(sub(n, "cols"), "augmentation.cols", a.cols);
    const std::string strat = get_string(sub(n, "strategy"), "augmentation.strategy", "pad");
    if (strat == "pad")
      a.strategy = ReshapeStrategy::pad;
    else if (strat == "overlap")
      a.strategy = ReshapeStrategy::overlap;
    else
      fail("augmentation.strategy", "expected pad or overlap");
    a.per_label = get_int(sub(n, "per_label"), "augmentation.per_label", a.per_label);
    a.seed_fraction =
        get_double(sub(n, "seed_fraction"), "augmentation.seed_fraction", a.seed_fraction);
    a.seed = get_u64(sub(n, "seed"), "augmentation.seed", a.seed);
  }

  {
    const YAML::Node n = root["classifiers"];
    check_keys(n, "classifiers",
               {"kinds", "knn_k", "rf_trees", "rf_max_depth", "svm_c", "svm_epochs",
                "nb_var_floor_rel"});
    const YAML::Node kinds = sub(n, "kinds");
    if (kinds.IsDefined() && !kinds.IsNull()) {
      if (!kinds.IsSequence()) fail("classifiers.kinds", "expected a list of names");
      cfg.classifiers.kinds.clear();
      for (std::size_t i = 0; i < kinds.size(); ++i) {
        const std::string name =
            get_string(kinds[i], "classifiers.kinds[" + std::to_string(i) + "]", "");
        try {
          cfg.classifiers.kinds.push_back(classifier_kind_from_name(name));
        } catch (const std::invalid_argument& ex) {
          fail("classifiers.kinds[" + std::to_string(i) + "]", ex.what());
        }
      }
    }
    Hyperparams& h = cfg.classifiers.hyper;
    h.knn_k = get_int(sub(n, "knn_k"), "classifiers.knn_k", h.knn_k);
    h.rf_trees = get_int(sub(n, "rf_trees"), "classifiers.rf_trees", h.rf_trees);
    h.rf_max_depth = get_int(sub(n, "rf_max_depth"), "classifiers.rf_max_depth", h.rf_max_depth);
    h.svm_c = get_double(sub(n, "svm_c"), "classifiers.svm_c", h.svm_c);
    h.svm_epochs = get_int(sub(n, "svm_epochs"), "classifiers.svm_epochs", h.svm_epochs);
    h.nb_var_floor_rel =
        get_double(sub(n, "nb_var_floor_rel"), "classifiers.nb_var_floor_rel", h.nb_var_floor_rel);
  }

  cfg.folds = get_int(root["folds"], "folds", cfg.folds);

  {
    const YAML::Node n = root["anomaly"];
    check_keys(n, "anomaly",
               {"enabled", "healthy_label", "device_index", "z_threshold", "fit_fraction"});
    AnomalyConfig& a = cfg.anomaly;
    a.enabled = get_bool(sub(n, "enabled"), "anomaly.enabled", a.enabled);
    a.healthy_label = get_int(sub(n, "healthy_label"), "anomaly.healthy_label", a.healthy_label);
    a.device_index = get_int(sub(n, "device_index"), "anomaly.device_index", a.device_index);
    a.z_threshold = get_double(sub(n, "z_threshold"), "anomaly.z_threshold", a.z_threshold);
    a.fit_fraction = get_double(sub(n, "fit_fraction"), "anomaly.fit_fraction", a.fit_fraction);
  }

  cfg.jobs = get_int(root["jobs"], "jobs", cfg.jobs);
  cfg.seed = get_u64(root["seed"], "seed", cfg.seed);
  cfg.output_dir = get_string(root["output_dir"], "output_dir", cfg.output_dir.string());

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const char* source_kind = c.source.kind == SourceKind::synthetic  ? "synthetic"
                            : c.source.kind == SourceKind::mat_dir ? "mat_dir"
                                                                   : "csv_dir";
  o << "source:\n"
    << "  kind: " << source_kind << "\n"
    << "  mat_dir: " << quote(c.source.mat_dir.string()) << "\n"
    << "  csv_dir: " << quote(c.source.csv_dir.string()) << "\n"
    << "  labels_csv: " << quote(c.source.labels_csv.string()) << "\n"
    << "  mat_rate_hz: " << fmt_double(c.source.mat_rate_hz) << "\n"
    << "  synthetic:\n"
    << "    traces_per_label: " << c.source.synthetic.traces_per_label << "\n"
    << "    duration_s: " << fmt_double(c.source.synthetic.duration_s) << "\n"
    << "    sample_rate_hz: " << fmt_double(c.source.synthetic.sample_rate_hz) << "\n"
    << "    base_amplitude_ms2: " << fmt_double(c.source.synthetic.base_amplitude_ms2) << "\n"
    << "    noise_rms_ms2: " << fmt_double(c.source.synthetic.noise_rms_ms2) << "\n";

  o << "devices:\n  indices: [";
  for (std::size_t i = 0; i < c.devices.indices.size(); ++i)
    o << (i ? ", " : "") << c.devices.indices[i];
  o << "]\n";

  o << "circuit:\n"
    << "  kind: " << (c.circuit.kind == CircuitKind::seh ? "seh" : "resistive") << "\n"
    << "  seh:\n"
    << "    storage_capacitance_uF: " << fmt_double(c.circuit.seh.storage_capacitance_f * 1e6)
    << "\n"
    << "    diode_drop_v: " << fmt_double(c.circuit.seh.diode_drop_v) << "\n"
    << "    diode_on_resistance_ohm: " << fmt_double(c.circuit.seh.diode_on_resistance_ohm) << "\n"
    << "    rated_voltage_v: " << fmt_double(c.circuit.seh.rated_voltage_v) << "\n";

  o << "windows:\n  lengths_s: [";
  for (std::size_t i = 0; i < c.windows.lengths_s.size(); ++i)
    o << (i ? ", " : "") << fmt_double(c.windows.lengths_s[i]);
  o << "]\n  time_points_s: [";
  for (std::size_t i = 0; i < c.windows.time_points_s.size(); ++i)
    o << (i ? ", " : "") << fmt_double(c.windows.time_points_s[i]);
  o << "]\n";

  o << "augmentation:\n"
    << "  enabled: " << (c.augmentation.enabled ? "true" : "false") << "\n"
    << "  beta: " << fmt_double(c.augmentation.beta) << "\n"
    << "  rows: " << c.augmentation.rows << "\n"
    << "  cols: " << c.augmentation.cols << "\n"
    << "  strategy: " << (c.augmentation.strategy == ReshapeStrategy::pad ? "pad" : "overlap")
    << "\n"
    << "  per_label: " << c.augmentation.per_label << "\n"
    << "  seed_fraction: " << fmt_double(c.augmentation.seed_fraction) << "\n"
    << "  seed: " << c.augmentation.seed << "\n";

  o << "classifiers:\n  kinds: [";
  for (std::size_t i = 0; i < c.classifiers.kinds.size(); ++i)
    o << (i ? ", " : "") << classifier_name(c.classifiers.kinds[i]);
  o << "]\n"
    << "  knn_k: " << c.classifiers.hyper.knn_k << "\n"
    << "  rf_trees: " << c.classifiers.hyper.rf_trees << "\n"
    << "  rf_max_depth: " << c.classifiers.hyper.rf_max_depth << "\n"
    << "  svm_c: " << fmt_double(c.classifiers.hyper.svm_c) << "\n"
    << "  svm_epochs: " << c.classifiers.hyper.svm_epochs << "\n"
    << "  nb_var_floor_rel: " << fmt_double(c.classifiers.hyper.nb_var_floor_rel) << "\n";

  o << "folds: " << c.folds << "\n";

  o << "anomaly:\n"
    << "  enabled: " << (c.anomaly.enabled ? "true" : "false") << "\n"
    << "  healthy_label: " << c.anomaly.healthy_label << "\n"
    << "  device_index: " << c.anomaly.device_index << "\n"
    << "  z_threshold: " << fmt_double(c.anomaly.z_threshold) << "\n"
    << "  fit_fraction: " << fmt_double(c.anomaly.fit_fraction) << "\n";

  o << "jobs: " << c.jobs << "\n"
    << "seed: " << c.seed << "\n"
    << "output_dir: " << quote(c.output_dir.string()) << "\n";
  return o.str();
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = serialize_config(config);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_fingerprint(const ExperimentConfig& config) {
  ExperimentConfig normalized = config;
  normalized.output_dir = "out";
  normalized.jobs = 1;
  return config_hash(normalized);
}

}  // namespace peh
