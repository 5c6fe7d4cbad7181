#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ftrluq {

// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(std::string_view bytes);

// Shortest decimal string that round-trips the double (to_chars).
// Used for every float in CSV and JSON output so bytes are reproducible.
std::string format_double(double v);

// Writes content to path atomically: temp file in the same directory,
// fsync-free rename. Parent directories are created as needed.
void write_file_atomic(const std::string& path, std::string_view content);

// Reads a whole file; throws std::runtime_error if unreadable.
std::string read_file(const std::string& path);

// Neumaier compensated sum over a fixed-order sequence; deterministic
// regardless of how callers later parallelize ensemble generation.
double compensated_sum(const std::vector<double>& xs);

}  // namespace ftrluq
