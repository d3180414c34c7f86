#include "peh/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "peh/harvester.hpp"
#include "peh/rng.hpp"
#include "peh/signal.hpp"
#include "peh/trace_io.hpp"

namespace fs = std::filesystem;
using namespace peh;

namespace {

// Fresh scratch directory under the build tree, wiped on construction.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.source.synthetic.traces_per_label = 2;
  c.source.synthetic.duration_s = 0.9;
  c.source.synthetic.sample_rate_hz = 2000.0;
  c.devices.indices = {3, 9};
  c.windows.lengths_s = {0.3};
  c.folds = 3;
  c.classifiers.kinds = {ClassifierKind::gaussian_nb};
  c.seed = 42;
  c.jobs = 2;
  return c;
}

// Two Gaussian blobs in 1-D at 10 + label*gap with spread sigma (kept well
// above zero: feature tables hold energies); one event id per row.
EnergyFeatureTable two_blob_table(int per_label, std::uint64_t seed, double gap = 10.0,
                                  double sigma = 0.3) {
  EnergyFeatureTable t;
  t.feature_names = {"e"};
  std::mt19937_64 rng = make_rng(seed);
  NormalSampler normal;
  for (int label = 1; label <= 2; ++label)
    for (int k = 0; k < per_label; ++k) {
      FeatureRow r;
      r.event_id = label * 1000000 + k;
      r.label = label;
      r.features = {10.0 + label * gap + sigma * normal(rng)};
      t.rows.push_back(std::move(r));
    }
  return t;
}

}  // namespace

TEST_CASE("fit_line recovers an exact line") {
  std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v + 2.0);
  const LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("fit_line on a parabola matches the hand-derived solution") {
  // y = x^2 on x = {0,1,2}: slope 2, intercept -1/3, R^2 = 1 - (2/3)/(26/3).
  std::vector<double> x{0, 1, 2};
  std::vector<double> y{0, 1, 4};
  const LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.intercept == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
  CHECK(fit.r2 == doctest::Approx(12.0 / 13.0).epsilon(1e-14));
}

TEST_CASE("fit_line degenerate inputs") {
  SUBCASE("constant target") {
    std::vector<double> x{1, 2, 3};
    std::vector<double> y{5, 5, 5};
    const LineFit fit = fit_line(x, y);
    CHECK(fit.slope == doctest::Approx(0.0));
    CHECK(fit.intercept == doctest::Approx(5.0));
    CHECK(fit.r2 == doctest::Approx(1.0));  // matched exactly
  }
  SUBCASE("zero x spread") {
    std::vector<double> x{2, 2, 2};
    std::vector<double> y{1, 2, 3};
    const LineFit fit = fit_line(x, y);
    CHECK(fit.slope == 0.0);
    CHECK(fit.intercept == doctest::Approx(2.0));
    CHECK(fit.r2 == 0.0);
  }
  SUBCASE("empty and single point") {
    const LineFit e = fit_line(std::vector<double>{}, std::vector<double>{});
    CHECK(e.slope == 0.0);
    CHECK(e.r2 == 0.0);
    const LineFit s = fit_line(std::vector<double>{1.0}, std::vector<double>{7.0});
    CHECK(s.slope == 0.0);
    CHECK(s.intercept == doctest::Approx(7.0));
  }
}

TEST_CASE("cumulative-energy slope of a constant voltage is v^2/R") {
  // v(t) = 2 V across 50 ohm: cumulative energy grows by v^2/R * dt each
  // sample, so the fitted slope must equal v^2/R = 0.08 W exactly.
  VoltageTrace v;
  v.sample_rate = 1000.0;
  v.samples.assign(500, 2.0);
  const std::vector<double> cum = cumulative_energy(v, 50.0);
  std::vector<double> t(cum.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i + 1) / v.sample_rate;
  const LineFit fit = fit_line(t, cum);
  CHECK(fit.slope == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("load_source_traces synthetic corpus is deterministic and labeled") {
  const ExperimentConfig c = small_config();
  const std::vector<AccelerationTrace> a = load_source_traces(c);
  const std::vector<AccelerationTrace> b = load_source_traces(c);
  REQUIRE(a.size() == 20);  // 10 labels x 2 traces
  std::map<int, int> counts;
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].label.has_value());
    ++counts[*a[i].label];
    CHECK(a[i].samples == b[i].samples);
    CHECK(a[i].source_id == b[i].source_id);
    CHECK(a[i].sample_rate == 2000.0);
  }
  CHECK(counts.size() == 10);
  for (const auto& [label, n] : counts) CHECK(n == 2);
  CHECK(a.front().source_id == "synth-l1-t0");
  // Different top-level seeds give different samples.
  ExperimentConfig c2 = c;
  c2.seed = 43;
  const std::vector<AccelerationTrace> d = load_source_traces(c2);
  CHECK(d.front().samples != a.front().samples);
}

TEST_CASE("cut_events ids agree with the feature-table ids") {
  const ExperimentConfig c = small_config();
  const std::vector<AccelerationTrace> traces = load_source_traces(c);
  const std::vector<EventRecord> events = cut_events(traces, 0.3);

  FeatureBuildOptions opt;
  opt.window_s = 0.3;
  const std::vector<HarvesterDesign> bank = c.selected_devices();
  const EnergyFeatureTable table =
      build_feature_table(traces, std::span<const HarvesterDesign>(&bank[0], 1), opt);

  REQUIRE(events.size() == table.rows.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(events[i].event_id == table.rows[i].event_id);
    CHECK(events[i].label == table.rows[i].label);
    // 0.9 s at 0.3 s windows -> exactly 600 samples each
    CHECK(events[i].window.samples.size() == 600);
  }
  // ids encode label, trace rank, window index
  CHECK(events.front().event_id == 1 * 1000000 + 0 * 10000 + 0);
  CHECK(events.front().source.find(";win=0") != std::string::npos);
}

TEST_CASE("augment_events honors count, labels, pool and determinism") {
  const ExperimentConfig c = small_config();
  const std::vector<AccelerationTrace> traces = load_source_traces(c);
  const std::vector<EventRecord> events = cut_events(traces, 0.3);

  AugmentConfig a;
  a.enabled = true;
  a.beta = 0.1;
  a.rows = 40;
  a.cols = 15;  // 600 = 40 x 15 exactly
  a.per_label = 5;
  a.seed_fraction = 0.5;
  a.seed = 7;

  const std::vector<AugmentedEvent> out = augment_events(events, a, 2);
  const std::vector<AugmentedEvent> again = augment_events(events, a, 1);
  REQUIRE(out.size() == 10 * 5);
  REQUIRE(again.size() == out.size());

  // Events per label: 2 traces x 3 windows = 6; pool = ceil(0.5*6) = 3.
  std::map<int, std::set<std::int64_t>> seeds_used;
  std::map<int, int> per_label_count;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const AugmentedEvent& ev = out[i];
    ++per_label_count[ev.label];
    seeds_used[ev.label].insert(ev.seed_event_id);
    CHECK(ev.window.samples.size() == 600);
    CHECK(ev.window.sample_rate == 2000.0);
    CHECK(ev.window.label == ev.label);
    // jobs=2 and jobs=1 produce identical output
    CHECK(ev.window.samples == again[i].window.samples);
    CHECK(ev.rng_seed == again[i].rng_seed);
    // every seed event carries the same label
    CHECK(ev.seed_event_id / 1000000 == ev.label);
  }
  for (const auto& [label, n] : per_label_count) CHECK(n == 5);
  // 5 copies cycled over a pool of 3 seeds -> exactly 3 distinct seeds
  for (const auto& [label, s] : seeds_used) CHECK(s.size() == 3);
  // distinct copies differ (different rng streams)
  CHECK(out[0].window.samples != out[3].window.samples);
}

TEST_CASE("augment_events with beta=0 returns the seed window") {
  const ExperimentConfig c = small_config();
  const std::vector<AccelerationTrace> traces = load_source_traces(c);
  const std::vector<EventRecord> events = cut_events(traces, 0.3);

  AugmentConfig a;
  a.beta = 0.0;
  a.rows = 40;
  a.cols = 15;
  a.per_label = 2;
  a.seed_fraction = 0.5;
  const std::vector<AugmentedEvent> out = augment_events(events, a, 1);

  std::map<std::int64_t, const EventRecord*> by_id;
  for (const EventRecord& e : events) by_id[e.event_id] = &e;
  for (const AugmentedEvent& ev : out) {
    const EventRecord& seed = *by_id.at(ev.seed_event_id);
    REQUIRE(ev.window.samples.size() == seed.window.samples.size());
    double max_err = 0.0;
    for (std::size_t i = 0; i < seed.window.samples.size(); ++i)
      max_err = std::max(max_err, std::abs(ev.window.samples[i] - seed.window.samples[i]));
    CHECK(max_err < 1e-9);
  }
}

TEST_CASE("training extras: duplicating the base table changes nothing") {
  // Gaussian NB statistics are MLE means/variances: duplicating every
  // training row leaves them identical, so CV with a full duplicate of the
  // base as extras must give exactly the plain CV confusion counts. The
  // blobs overlap so the check also covers near-boundary predictions.
  const EnergyFeatureTable base = two_blob_table(12, 5, 1.0, 1.0);
  const FoldAssignment folds = kfold_split(base, 3, 11);

  EnergyFeatureTable extras = base;
  std::map<std::int64_t, std::int64_t> seed_of;
  for (const FeatureRow& r : base.rows) seed_of[r.event_id] = r.event_id;

  const Hyperparams hp;
  const CvResult plain =
      cross_validate(ClassifierKind::gaussian_nb, base, folds, hp, 123);
  const CvResult dup = cross_validate_with_training_extras(
      ClassifierKind::gaussian_nb, hp, 123, base, extras, seed_of, folds);

  // A duplicate row keeps its original's event id, so it is excluded
  // exactly when the original is under test: every training set is {each
  // remaining row twice} and the fitted statistics are unchanged.
  CHECK(dup.accuracy == plain.accuracy);
  REQUIRE(dup.confusion.labels == plain.confusion.labels);
  CHECK(dup.confusion.counts == plain.confusion.counts);
}

TEST_CASE("training extras actually train: poisoned extras break a clean problem") {
  const EnergyFeatureTable base = two_blob_table(12, 5);
  const FoldAssignment folds = kfold_split(base, 3, 11);
  const Hyperparams hp;

  const CvResult plain =
      cross_validate(ClassifierKind::gaussian_nb, base, folds, hp, 123);
  CHECK(plain.accuracy == doctest::Approx(1.0));  // blobs are 30+ sigma apart

  // Extras: label-swapped copies, 3x the base size -> majority of the
  // training mass claims the opposite label.
  EnergyFeatureTable poison;
  poison.feature_names = base.feature_names;
  std::map<std::int64_t, std::int64_t> seed_of;
  std::int64_t next_id = 9000000;
  for (int copy = 0; copy < 3; ++copy)
    for (const FeatureRow& r : base.rows) {
      FeatureRow p = r;
      p.event_id = next_id++;
      p.label = r.label == 1 ? 2 : 1;
      seed_of[p.event_id] = r.event_id;
      poison.rows.push_back(std::move(p));
    }
  const CvResult broken = cross_validate_with_training_extras(
      ClassifierKind::gaussian_nb, hp, 123, base, poison, seed_of, folds);
  CHECK(broken.accuracy < 0.5);
}

TEST_CASE("training extras are excluded from their seed event's fold") {
  // 2 folds. Extras are opposite-label copies of fold-0 rows only. When
  // fold 0 is the test fold those extras sit out, so fold-0 predictions
  // stay perfect; when fold 1 is tested the poison trains and can only
  // break fold-1 rows. Errors are therefore capped by |fold 1|.
  const EnergyFeatureTable base = two_blob_table(10, 5);
  const FoldAssignment folds = kfold_split(base, 2, 11);
  const Hyperparams hp;

  EnergyFeatureTable poison;
  poison.feature_names = base.feature_names;
  std::map<std::int64_t, std::int64_t> seed_of;
  std::int64_t next_id = 9000000;
  std::int64_t fold1_rows = 0;
  for (const FeatureRow& r : base.rows)
    if (folds.fold(r.event_id) == 1) ++fold1_rows;
  for (int copy = 0; copy < 5; ++copy)
    for (const FeatureRow& r : base.rows) {
      if (folds.fold(r.event_id) != 0) continue;
      FeatureRow p = r;
      p.event_id = next_id++;
      p.label = r.label == 1 ? 2 : 1;
      seed_of[p.event_id] = r.event_id;
      poison.rows.push_back(std::move(p));
    }
  const CvResult cv = cross_validate_with_training_extras(
      ClassifierKind::gaussian_nb, hp, 123, base, poison, seed_of, folds);

  const auto total = static_cast<std::int64_t>(base.rows.size());
  const auto errors =
      total - static_cast<std::int64_t>(std::llround(cv.accuracy * static_cast<double>(total)));
  CHECK(errors <= fold1_rows);
  CHECK(errors >= 1);  // the poison must have actually trained fold 1

  // Unknown extra event id is rejected.
  std::map<std::int64_t, std::int64_t> missing;
  CHECK_THROWS_AS(cross_validate_with_training_extras(ClassifierKind::gaussian_nb, hp, 123,
                                                      base, poison, missing, folds),
                  std::invalid_argument);
}

TEST_CASE("run_study produces the full grid deterministically") {
  ExperimentConfig c = small_config();
  c.augmentation.enabled = true;
  c.augmentation.beta = 0.1;
  c.augmentation.rows = 40;
  c.augmentation.cols = 15;
  c.augmentation.per_label = 4;
  c.augmentation.seed = 3;

  const StudyResult r = run_study(c);

  CHECK(r.version == kToolkitVersion);
  CHECK(r.fingerprint.size() == 16);
  CHECK(r.trace_count == 20);
  CHECK(r.label_counts.size() == 10);
  REQUIRE(r.device_names == std::vector<std::string>{"device3", "device9"});

  // grid: 1 window x (device3, device9, fused) x 1 classifier x {plain,aug}
  REQUIRE(r.cells.size() == 6);
  std::set<std::string> slugs;
  for (const CellResult& cell : r.cells) {
    INFO(cell.cell.slug(), ": ", cell.error);
    CHECK(cell.ok);
    CHECK(cell.events == 60);  // 20 traces x 3 windows
    slugs.insert(cell.cell.slug());
    CHECK(cell.accuracy >= 0.0);
    CHECK(cell.accuracy <= 1.0);
    CHECK(cell.confusion.total() == 60);
  }
  CHECK(slugs.count("device3_w0.3_gaussian_nb"));
  CHECK(slugs.count("device3_w0.3_gaussian_nb_aug"));
  CHECK(slugs.count("fused_w0.3_gaussian_nb"));
  CHECK(slugs.count("fused_w0.3_gaussian_nb_aug"));

  // fused feature dim = sum of device dims
  for (const CellResult& cell : r.cells)
    CHECK(cell.features == (cell.cell.device_set == "fused" ? 2 : 1));

  // diagnostics cover every device x trace, curves only the first per label
  CHECK(r.trace_stats.size() == 2 * 20);
  CHECK(r.frf.size() == 2 * 101);
  std::set<std::pair<std::string, int>> curve_keys;
  for (const CurvePoint& p : r.energy_curves) curve_keys.insert({p.device, p.label});
  CHECK(curve_keys.size() == 2 * 10);
  // 12 bins per device x label
  CHECK(r.histogram.size() == 2 * 10 * 12);
  CHECK(r.cov.size() == 2 * 10);
  for (const CovRow& row : r.cov) {
    CHECK(row.events == 6);
    CHECK(row.mean_j > 0.0);
  }
  // histogram counts per device sum to the event count
  std::map<std::string, std::int64_t> hist_total;
  for (const HistogramBin& b : r.histogram) hist_total[b.device] += b.count;
  for (const auto& [dev, n] : hist_total) CHECK(n == 60);

  // determinism: a second run is identical where it matters
  const StudyResult r2 = run_study(c);
  REQUIRE(r2.cells.size() == r.cells.size());
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    CHECK(r2.cells[i].accuracy == r.cells[i].accuracy);
    CHECK(r2.cells[i].confusion.counts == r.cells[i].confusion.counts);
  }
  REQUIRE(r2.trace_stats.size() == r.trace_stats.size());
  for (std::size_t i = 0; i < r.trace_stats.size(); ++i)
    CHECK(r2.trace_stats[i].total_energy_j == r.trace_stats[i].total_energy_j);
}

TEST_CASE("a failing augmentation axis does not void the plain cells") {
  ExperimentConfig c = small_config();
  c.augmentation.enabled = true;
  c.augmentation.rows = 20;
  c.augmentation.cols = 5;  // capacity 100 < 600-sample windows -> augment fails

  const StudyResult r = run_study(c);
  REQUIRE(r.cells.size() == 6);
  for (const CellResult& cell : r.cells) {
    if (cell.cell.augmented) {
      CHECK_FALSE(cell.ok);
      CHECK_FALSE(cell.error.empty());
    } else {
      INFO(cell.cell.slug(), ": ", cell.error);
      CHECK(cell.ok);
    }
  }
  CHECK(r.failed_cells() == 3);

  // report.csv records the error rows
  ScratchDir dir("peh_study_failcells");
  write_study_artifacts(r, dir.path);
  const CsvTable report = read_csv_table(dir.path / "report.csv");
  int ok_rows = 0, error_rows = 0;
  for (const auto& row : report.rows) {
    if (row[report.col("status")] == "ok")
      ++ok_rows;
    else {
      ++error_rows;
      CHECK_FALSE(row[report.col("error")].empty());
    }
  }
  CHECK(ok_rows == 3);
  CHECK(error_rows == 3);
}

TEST_CASE("study artifacts are written and charts are deterministic") {
  ExperimentConfig c = small_config();
  c.anomaly.enabled = true;
  c.anomaly.healthy_label = 1;
  c.anomaly.device_index = 3;

  const StudyResult r = run_study(c);
  ScratchDir dir("peh_study_artifacts");
  write_study_artifacts(r, dir.path);

  for (const char* name :
       {"run.csv", "report.csv", "slopes.csv", "energy_curves.csv", "histogram.csv", "cov.csv",
        "frf.csv", "anomaly_model.csv", "anomaly_events.csv", "anomaly_summary.csv",
        "config_resolved.yaml", "confusion_device3_w0.3_gaussian_nb.csv",
        "confusion_fused_w0.3_gaussian_nb.csv"}) {
    INFO(name);
    CHECK(fs::exists(dir.path / name));
  }

  // resolved config round-trips
  const ExperimentConfig back = load_config(dir.path / "config_resolved.yaml");
  CHECK(config_hash(back) == config_hash(c));

  // report.csv carries one ok row per cell
  const CsvTable report = read_csv_table(dir.path / "report.csv");
  CHECK(report.rows.size() == r.cells.size());
  for (const auto& row : report.rows) CHECK(row[report.col("status")] == "ok");

  render_report_charts(dir.path);
  std::vector<fs::path> svgs;
  for (const auto& e : fs::directory_iterator(dir.path))
    if (e.path().extension() == ".svg") svgs.push_back(e.path());
  std::sort(svgs.begin(), svgs.end());
  REQUIRE(svgs.size() >= 8);

  std::map<fs::path, std::string> first;
  for (const fs::path& p : svgs) first[p] = slurp(p);
  render_report_charts(dir.path);  // idempotent
  for (const fs::path& p : svgs) CHECK(slurp(p) == first[p]);

  std::set<std::string> names;
  for (const fs::path& p : svgs) names.insert(p.filename().string());
  CHECK(names.count("accuracy_w0.3.svg"));
  CHECK(names.count("frf.svg"));
  CHECK(names.count("energy_curves_device3.svg"));
  CHECK(names.count("histogram_device9.svg"));
  CHECK(names.count("cov.svg"));
  CHECK(names.count("slopes.svg"));
  CHECK(names.count("anomaly_scores.svg"));
  CHECK(names.count("confusion_device3_w0.3_gaussian_nb.svg"));
}

TEST_CASE("run_anomaly fits on leading healthy events and scores everything") {
  ExperimentConfig c = small_config();
  c.anomaly.enabled = true;
  c.anomaly.healthy_label = 1;
  c.anomaly.device_index = 3;
  c.anomaly.fit_fraction = 0.5;
  c.anomaly.z_threshold = 3.0;

  const std::vector<AccelerationTrace> traces = load_source_traces(c);
  const AnomalyReport rep = run_anomaly(c, traces);

  CHECK(rep.enabled);
  CHECK(rep.device == "device3");
  CHECK(rep.window_s == 0.3);
  CHECK(rep.model.stddev > 0.0);
  CHECK(rep.model.mean > 0.0);

  // label 1 has 2 traces x 3 windows = 6 events; fit on ceil(0.5*6) = 3
  std::size_t fit_rows = 0;
  for (const AnomalyEventRow& row : rep.events) {
    CHECK(std::isfinite(row.score));
    if (row.used_for_fit) {
      ++fit_rows;
      CHECK(row.label == 1);
    }
  }
  CHECK(fit_rows == 3);
  CHECK(rep.events.size() == 60);  // every event of the corpus scored
  // fit rows come first
  for (std::size_t i = 0; i < fit_rows; ++i) CHECK(rep.events[i].used_for_fit);

  // alarm flag is consistent with the threshold
  for (const AnomalyEventRow& row : rep.events)
    CHECK(row.alarm == (std::abs(row.score) > rep.model.z_threshold));

  // too-small fit pool is a config error
  ExperimentConfig tiny = c;
  tiny.source.synthetic.traces_per_label = 1;  // 3 healthy events
  tiny.anomaly.fit_fraction = 0.4;             // ceil(0.4*3) = 2 < 3
  const std::vector<AccelerationTrace> few = load_source_traces(tiny);
  CHECK_THROWS_AS(run_anomaly(tiny, few), ConfigError);
}

TEST_CASE("read_csv_table handles quoting and structure") {
  ScratchDir dir("peh_csv_table");
  const fs::path p = dir.path / "t.csv";
  {
    std::ofstream out(p, std::ios::binary);
    out << "a,b,c\r\n1,\"x,y\",\"he said \"\"hi\"\"\"\n,,\n\"multi\nline\",2,3\n";
  }
  const CsvTable t = read_csv_table(p);
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0] == std::vector<std::string>{"1", "x,y", "he said \"hi\""});
  CHECK(t.rows[1] == std::vector<std::string>{"", "", ""});
  CHECK(t.rows[2] == std::vector<std::string>{"multi\nline", "2", "3"});
  CHECK(t.col("b") == 1);
  CHECK_THROWS_AS(t.col("nope"), std::invalid_argument);

  const fs::path bad = dir.path / "bad.csv";
  {
    std::ofstream out(bad, std::ios::binary);
    out << "a,b\n\"unterminated\n";
  }
  CHECK_THROWS(read_csv_table(bad));
  CHECK_THROWS(read_csv_table(dir.path / "absent.csv"));
}

TEST_CASE("manifest-driven corpus loading reports row-level errors") {
  ScratchDir dir("peh_manifest");
  // two tiny trace CSVs
  for (int i = 1; i <= 2; ++i) {
    AccelerationTrace t;
    t.sample_rate = 100.0;
    for (int k = 0; k < 50; ++k) t.samples.push_back(0.01 * k * i);
    write_trace_csv(dir.path / ("t" + std::to_string(i) + ".csv"), t);
  }
  {
    std::ofstream out(dir.path / "labels.csv");
    out << "file,label\nt1.csv,1\nt2.csv,2\n";
  }

  ExperimentConfig c;
  c.source.kind = SourceKind::csv_dir;
  c.source.csv_dir = dir.path;
  c.source.labels_csv = dir.path / "labels.csv";

  const std::vector<AccelerationTrace> traces = load_source_traces(c);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].label == 1);
  CHECK(traces[1].label == 2);
  CHECK(traces[0].source_id.find("t1.csv") != std::string::npos);
  CHECK(traces[0].sample_rate == doctest::Approx(100.0));

  SUBCASE("missing file names the row") {
    std::ofstream(dir.path / "labels.csv") << "file,label\nt1.csv,1\nmissing.csv,2\n";
    try {
      load_source_traces(c);
      FAIL("expected ConfigError");
    } catch (const ConfigError& ex) {
      CHECK(std::string(ex.what()).find("row 3") != std::string::npos);
      CHECK(std::string(ex.what()).find("missing.csv") != std::string::npos);
    }
  }
  SUBCASE("bad label") {
    std::ofstream(dir.path / "labels.csv") << "file,label\nt1.csv,zero\n";
    CHECK_THROWS_AS(load_source_traces(c), ConfigError);
  }
  SUBCASE("label below 1") {
    std::ofstream(dir.path / "labels.csv") << "file,label\nt1.csv,0\n";
    CHECK_THROWS_AS(load_source_traces(c), ConfigError);
  }
  SUBCASE("missing columns") {
    std::ofstream(dir.path / "labels.csv") << "path,label\nt1.csv,1\n";
    CHECK_THROWS_AS(load_source_traces(c), ConfigError);
  }
}
