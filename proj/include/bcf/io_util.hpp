#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace bcf {

// FNV-1a, 64-bit. Used for content digests in checkpoints.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a_byte(std::uint64_t h, unsigned char b) {
  return (h ^ b) * kFnvPrime;
}

inline std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char b : s) h = fnv1a_byte(h, b);
  return h;
}

// Writes via a temp file in the same directory, then renames over the target,
// so readers never observe a half-written file.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& fill);

std::string read_file(const std::string& path);  // throws Error if unreadable

// Fixed-point decimal formatting for reports (3 places) and traces (12).
std::string fmt3(double x);
std::string fmt12(double x);

// Minimal CSV: fields containing commas, quotes or newlines are quoted,
// embedded quotes doubled. Parse handles exactly what write emits.
std::string csv_join(const std::vector<std::string>& fields);
std::vector<std::string> csv_split(const std::string& line);

std::vector<std::string> tsv_split(const std::string& line);

// Splits a file into lines, tolerating trailing CR and a missing final newline.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace bcf
