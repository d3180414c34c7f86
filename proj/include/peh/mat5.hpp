#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peh/trace.hpp"

namespace peh {

// One numeric variable from a MAT file, values widened to double.
struct MatVariable {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;  // column-major, dims product entries
};

// Parses the supported MAT version-5 subset: little-endian files, real
// numeric arrays of any class (double through uint64, whatever the on-disk
// storage type), plain or zlib-compressed elements. Unsupported variable
// classes (cells, structs, chars, complex) are listed by name with empty
// values so callers can report them. Throws MatError on malformed or
// truncated input.
std::vector<MatVariable> parse_mat5(std::span<const std::uint8_t> bytes);

std::vector<MatVariable> read_mat_file(const std::filesystem::path& path);

// Names of all variables in the file (including unsupported ones).
std::vector<std::string> mat5_variable_names(const std::filesystem::path& path);

// First variable whose name contains `name_pattern` as a substring.
// Throws MatError if no variable matches or the match is unsupported.
MatVariable read_mat_variable(const std::filesystem::path& path, const std::string& name_pattern);

// Loads a vector-shaped variable as an acceleration trace. The sample rate
// comes from the caller (MAT files do not embed it).
AccelerationTrace read_mat_trace(const std::filesystem::path& path, const std::string& name_pattern,
                                 double sample_rate_hz, std::optional<int> label = std::nullopt);

}  // namespace peh
