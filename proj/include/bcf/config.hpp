#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "bcf/types.hpp"

namespace bcf {

// Flat key = value file, # comments, optional double quotes around values.
// No sections, no nesting: every experiment is one self-describing record.
class Config {
 public:
  Config() = default;
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Required variants: throw with the key name when absent.
  std::string need_str(const std::string& key) const;

 private:
  std::unordered_map<std::string, std::string> values_;
};

}  // namespace bcf
