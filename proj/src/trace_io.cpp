#include "peh/trace_io.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace peh {
namespace {

void write_csv_impl(const std::filesystem::path& path, const std::vector<double>& samples,
                    double sample_rate, const char* value_name) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::fprintf(f, "time_s,%s\n", value_name);
  const double dt = 1.0 / sample_rate;
  for (std::size_t i = 0; i < samples.size(); ++i)
    std::fprintf(f, "%.17g,%.17g\n", static_cast<double>(i) * dt, samples[i]);
  std::fclose(f);
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path, const AccelerationTrace& trace) {
  trace.validate();
  write_csv_impl(path, trace.samples, trace.sample_rate, "accel_ms2");
}

void write_trace_csv(const std::filesystem::path& path, const VoltageTrace& trace) {
  trace.validate();
  write_csv_impl(path, trace.samples, trace.sample_rate, "voltage_v");
}

AccelerationTrace read_trace_csv(const std::filesystem::path& path, std::optional<int> label) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("time_s,", 0) != 0)
    throw std::runtime_error(path.string() + ": expected header starting with 'time_s,'");

  std::vector<double> times, values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double t, v;
    if (std::sscanf(line.c_str(), "%lg,%lg", &t, &v) != 2)
      throw std::runtime_error(path.string() + ": bad row at line " + std::to_string(lineno));
    times.push_back(t);
    values.push_back(v);
  }
  if (times.size() < 2) throw std::runtime_error(path.string() + ": needs at least 2 samples");

  const double span = times.back() - times.front();
  if (!(span > 0.0)) throw std::runtime_error(path.string() + ": time column not increasing");
  const double dt = span / static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double step = times[i] - times[i - 1];
    if (std::abs(step - dt) > 1e-6 * dt)
      throw std::runtime_error(path.string() + ": non-uniform sampling near line " +
                               std::to_string(i + 2));
  }

  AccelerationTrace trace;
  trace.samples = std::move(values);
  trace.sample_rate = 1.0 / dt;
  trace.label = label;
  trace.source_id = path.filename().string();
  trace.validate();
  return trace;
}

void write_trace_f64(const std::filesystem::path& path, const AccelerationTrace& trace) {
  trace.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(trace.samples.data()),
            static_cast<std::streamsize>(trace.samples.size() * sizeof(double)));
  out.close();

  YAML::Emitter meta;
  meta << YAML::BeginMap;
  meta << YAML::Key << "sample_rate_hz" << YAML::Value << trace.sample_rate;
  if (trace.label) meta << YAML::Key << "label" << YAML::Value << *trace.label;
  meta << YAML::Key << "source_id" << YAML::Value << trace.source_id;
  meta << YAML::EndMap;
  std::ofstream mf(path.string() + ".meta");
  if (!mf) throw std::runtime_error("cannot write " + path.string() + ".meta");
  mf << meta.c_str() << "\n";
}

AccelerationTrace read_trace_f64(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % sizeof(double) != 0)
    throw std::runtime_error(path.string() + ": size is not a multiple of 8");

  const std::filesystem::path meta_path = path.string() + ".meta";
  if (!std::filesystem::exists(meta_path))
    throw std::runtime_error("missing sidecar " + meta_path.string());
  const YAML::Node meta = YAML::LoadFile(meta_path.string());

  AccelerationTrace trace;
  trace.samples.resize(bytes.size() / sizeof(double));
  std::memcpy(trace.samples.data(), bytes.data(), bytes.size());
  trace.sample_rate = meta["sample_rate_hz"].as<double>();
  if (meta["label"]) trace.label = meta["label"].as<int>();
  trace.source_id = meta["source_id"] ? meta["source_id"].as<std::string>()
                                      : path.filename().string();
  trace.validate();
  return trace;
}

}  // namespace peh
