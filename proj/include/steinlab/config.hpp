#pragma once

#include "steinlab/common.hpp"
#include "steinlab/models.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace steinlab {

/// Parsed `key = value` configuration. Lines starting with `#` are comments,
/// values may be quoted. Keys `potential.<name>` and `kernel.<name>` carry
/// model parameters.
class Config {
 public:
  Config() = default;
  explicit Config(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of numbers.
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  /// Entries `prefix.name = value` as a map name -> value.
  ParameterMap with_prefix(const std::string& prefix) const;

  /// FNV-1a over the sorted entries, excluding keys that do not affect results
  /// (`out`, `threads`). 16 hex digits.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// Potential and kernel selected by `potential`, `kernel` (defaults quadratic,
/// gaussian) and their prefixed parameters; a top-level `bandwidth` is
/// forwarded to the kernel.
PotentialPtr potential_from_config(const Config& config);
KernelPtr kernel_from_config(const Config& config);

/// Version string recorded in every run record.
inline constexpr const char* kCodeVersion = "stein-lab 0.1.0";

}  // namespace steinlab
