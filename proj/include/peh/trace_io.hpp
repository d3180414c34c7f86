#pragma once

#include <filesystem>
#include <optional>

#include "peh/trace.hpp"

namespace peh {

// Two-column CSV: header "time_s,<value name>", one row per sample.
// Acceleration files use value name "accel_ms2", voltage files "voltage_v";
// readers accept any value-column name.
void write_trace_csv(const std::filesystem::path& path, const AccelerationTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const VoltageTrace& trace);

// Reads a trace CSV; the sample rate is inferred from the time column,
// which must be uniform (relative tolerance 1e-6).
AccelerationTrace read_trace_csv(const std::filesystem::path& path,
                                 std::optional<int> label = std::nullopt);

// Raw little-endian float64 samples, plus a "<path>.meta" sidecar carrying
// sample_rate_hz, optional label, and source_id.
void write_trace_f64(const std::filesystem::path& path, const AccelerationTrace& trace);
AccelerationTrace read_trace_f64(const std::filesystem::path& path);

}  // namespace peh
