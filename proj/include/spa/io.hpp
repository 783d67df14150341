#pragma once

// File formats: comma-separated values with '.' decimals and an optional
// header row, plus deterministic double formatting for report files.

#include <cstdint>
#include <string>
#include <string_view>

#include "spa/linalg.hpp"

namespace spa::io {

// Shortest round-trip representation (printf %.17g trimmed via
// serialization of the exact value); deterministic across runs.
std::string format_double(double v);

// Reads a rectangular CSV; a first row whose first field does not parse as
// a number is treated as a header and skipped.  Ragged rows throw.
Matrix read_csv_matrix(const std::string& path);

// Single-column CSV (optional header).
Vector read_csv_vector(const std::string& path);

void write_vector_csv(const std::string& path, const Vector& v);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t fnv1a_file(const std::string& path);
std::string hex64(std::uint64_t v);

}  // namespace spa::io
