#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "peh/config.hpp"

using namespace peh;

namespace {

// Expect parse_config to throw a ConfigError whose message names `path_fragment`.
void expect_error(const std::string& yaml, const std::string& path_fragment) {
  try {
    parse_config(yaml);
    FAIL_CHECK("expected ConfigError for: " << yaml);
  } catch (const ConfigError& ex) {
    CHECK_MESSAGE(std::string(ex.what()).find(path_fragment) != std::string::npos,
                  "message '" << ex.what() << "' lacks '" << path_fragment << "'");
  }
}

}  // namespace

TEST_CASE("empty config yields documented defaults") {
  const ExperimentConfig cfg = parse_config("");
  CHECK(cfg.source.kind == SourceKind::synthetic);
  CHECK(cfg.source.synthetic.traces_per_label == 6);
  CHECK(cfg.source.synthetic.duration_s == doctest::Approx(0.9));
  CHECK(cfg.source.synthetic.sample_rate_hz == doctest::Approx(4000.0));
  CHECK(cfg.devices.indices.empty());
  CHECK(cfg.circuit.kind == CircuitKind::resistive);
  CHECK(cfg.windows.lengths_s == std::vector<double>{0.3});
  CHECK(cfg.windows.time_points_s.empty());
  CHECK_FALSE(cfg.augmentation.enabled);
  CHECK(cfg.classifiers.kinds == std::vector<ClassifierKind>{ClassifierKind::gaussian_nb});
  CHECK(cfg.folds == 5);
  CHECK_FALSE(cfg.anomaly.enabled);
  CHECK(cfg.jobs == 1);
  CHECK(cfg.seed == 0);
  CHECK(cfg.output_dir == std::filesystem::path("out"));
}

TEST_CASE("serialize/parse round trip is byte-stable") {
  ExperimentConfig cfg;
  cfg.source.synthetic.traces_per_label = 4;
  cfg.source.synthetic.noise_rms_ms2 = 0.125;
  cfg.devices.indices = {3, 8, 9};
  cfg.circuit.kind = CircuitKind::seh;
  cfg.circuit.seh.storage_capacitance_f = 2.2e-6;
  cfg.windows.lengths_s = {0.1, 0.3};
  cfg.windows.time_points_s = {0.05, 0.1};
  cfg.augmentation.enabled = true;
  cfg.augmentation.beta = 0.2;
  cfg.augmentation.rows = 60;
  cfg.augmentation.cols = 40;
  cfg.augmentation.per_label = 12;
  cfg.classifiers.kinds = {ClassifierKind::gaussian_nb, ClassifierKind::knn};
  cfg.classifiers.hyper.knn_k = 3;
  cfg.folds = 4;
  cfg.anomaly.enabled = true;
  cfg.anomaly.device_index = 9;
  cfg.jobs = 4;
  cfg.seed = 12345;
  cfg.output_dir = "results/run1";

  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.devices.indices == cfg.devices.indices);
  CHECK(back.circuit.kind == CircuitKind::seh);
  CHECK(back.windows.time_points_s == cfg.windows.time_points_s);
  CHECK(back.augmentation.rows == 60);
  CHECK(back.classifiers.hyper.knn_k == 3);
  CHECK(back.seed == 12345);
  CHECK(back.output_dir == std::filesystem::path("results/run1"));
}

TEST_CASE("storage capacitance is read in microfarads") {
  const ExperimentConfig cfg = parse_config(
      "circuit:\n  kind: seh\n  seh:\n    storage_capacitance_uF: 47\n"
      "windows:\n  lengths_s: [1.0]\n  time_points_s: [0.5]\n");
  CHECK(cfg.circuit.seh.storage_capacitance_f == doctest::Approx(47e-6));
  const std::string text = serialize_config(cfg);
  CHECK(text.find("storage_capacitance_uF: 47\n") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their dotted path") {
  expect_error("bogus: 1\n", "config.bogus");
  expect_error("source:\n  kindd: synthetic\n", "source.kindd");
  expect_error("circuit:\n  seh:\n    cap: 1\n", "circuit.seh.cap");
  expect_error("augmentation:\n  rows: 10\n  colz: 3\n", "augmentation.colz");
}

TEST_CASE("validation failures name the offending field") {
  expect_error("folds: 1\n", "folds");
  expect_error("jobs: 0\n", "jobs");
  expect_error("devices:\n  indices: [11]\n", "devices.indices[0]");
  expect_error("devices:\n  indices: [3, 3]\n", "devices.indices[1]");
  expect_error("windows:\n  lengths_s: []\n", "windows.lengths_s");
  expect_error("windows:\n  lengths_s: [0.3, 0.3]\n", "windows.lengths_s[1]");
  expect_error("windows:\n  lengths_s: [-0.1]\n", "windows.lengths_s[0]");
  expect_error("augmentation:\n  beta: 1.5\n", "augmentation.beta");
  expect_error("augmentation:\n  rows: 10\n  cols: 10\n", "augmentation.rows");
  expect_error("augmentation:\n  seed_fraction: 0\n", "augmentation.seed_fraction");
  expect_error("classifiers:\n  kinds: []\n", "classifiers.kinds");
  expect_error("classifiers:\n  kinds: [gaussian_nb, gaussian_nb]\n", "classifiers.kinds[1]");
  expect_error("classifiers:\n  kinds: [perceptron]\n", "classifiers.kinds[0]");
  expect_error("anomaly:\n  fit_fraction: 1.0\n", "anomaly.fit_fraction");
  expect_error("anomaly:\n  device_index: 0\n", "anomaly.device_index");
  expect_error("source:\n  kind: maybe\n", "source.kind");
  expect_error("source:\n  synthetic:\n    sample_rate_hz: 900\n",
               "source.synthetic.sample_rate_hz");
  expect_error("circuit:\n  kind: open\n", "circuit.kind");
}

TEST_CASE("type errors name the offending field") {
  expect_error("folds: banana\n", "folds");
  expect_error("seed: -4\n", "seed");
  expect_error("windows:\n  lengths_s: 0.3\n", "windows.lengths_s");
  expect_error("augmentation:\n  enabled: sometimes\n", "augmentation.enabled");
  expect_error("classifiers:\n  kinds: knn\n", "classifiers.kinds");
}

TEST_CASE("storage circuit requires checkpoint times within the shortest window") {
  expect_error("circuit:\n  kind: seh\n", "windows.time_points_s");
  expect_error(
      "circuit:\n  kind: seh\nwindows:\n  lengths_s: [0.3]\n  time_points_s: [0.5]\n",
      "windows.time_points_s[0]");
  const ExperimentConfig ok = parse_config(
      "circuit:\n  kind: seh\nwindows:\n  lengths_s: [0.3]\n  time_points_s: [0.1, 0.3]\n");
  CHECK(ok.windows.time_points_s.size() == 2);
}

TEST_CASE("file-backed sources must exist at parse time") {
  expect_error("source:\n  kind: mat_dir\n", "source.mat_dir");
  expect_error(
      "source:\n  kind: mat_dir\n  mat_dir: /nonexistent-path-xyz\n  labels_csv: /tmp/x.csv\n",
      "source.mat_dir");
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "peh_cfg_test_dir";
  std::filesystem::create_directories(dir);
  const std::filesystem::path labels = dir / "labels.csv";
  std::ofstream(labels) << "file,label\n";
  const ExperimentConfig cfg = parse_config("source:\n  kind: mat_dir\n  mat_dir: \"" +
                                            dir.string() + "\"\n  labels_csv: \"" +
                                            labels.string() + "\"\n");
  CHECK(cfg.source.kind == SourceKind::mat_dir);
  CHECK(cfg.source.mat_rate_hz == doctest::Approx(12000.0));
  std::filesystem::remove_all(dir);
}

TEST_CASE("config hash is stable and sensitive") {
  ExperimentConfig a;
  ExperimentConfig b;
  const std::string ha = config_hash(a);
  CHECK(ha.size() == 16);
  CHECK(config_hash(b) == ha);
  b.seed = 1;
  CHECK(config_hash(b) != ha);
  b = a;
  b.windows.lengths_s = {0.30000000000000004};
  CHECK(config_hash(b) != ha);
}

TEST_CASE("selected_devices maps 1-based indices onto the bank") {
  ExperimentConfig cfg;
  CHECK(cfg.selected_devices().size() == 10);
  cfg.devices.indices = {3, 9};
  const auto sel = cfg.selected_devices();
  REQUIRE(sel.size() == 2);
  CHECK(sel[0].natural_frequencies_hz.at(0) == doctest::Approx(50.0));
  CHECK(sel[1].natural_frequencies_hz.at(0) == doctest::Approx(450.0));
}

TEST_CASE("load_config reports unreadable paths") {
  CHECK_THROWS_AS(static_cast<void>(load_config("/nonexistent/config.yaml")), ConfigError);
  const std::filesystem::path p =
      std::filesystem::temp_directory_path() / "peh_cfg_roundtrip.yaml";
  {
    std::ofstream out(p);
    out << "seed: 77\nfolds: 3\n";
  }
  const ExperimentConfig cfg = load_config(p);
  CHECK(cfg.seed == 77);
  CHECK(cfg.folds == 3);
  std::filesystem::remove(p);
}

TEST_CASE("not-YAML input is rejected up front") {
  expect_error("{unbalanced: [\n", "not parseable");
}
