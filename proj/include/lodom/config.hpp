#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lodom/pipeline.hpp"

namespace lodom {

/// Schema violation or parse failure; the message names the offending key.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Flat key/value text with [section] headers and '#' comments. Values are
/// strings until a typed getter pulls them out; every key must belong to
/// the schema (unknown keys are reported by name).
class FlatConfig {
 public:
  static FlatConfig parse_file(const std::string& path);
  static FlatConfig parse_string(const std::string& text,
                                 const std::string& name = "<string>");

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  int get_int(const std::string& key, int def);
  double get_double(const std::string& key, double def);
  bool get_bool(const std::string& key, bool def);
  std::string get_string(const std::string& key, const std::string& def);

  /// Keys never touched by a getter; non-empty means a schema violation.
  std::vector<std::string> unconsumed() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> consumed_;
};

struct SimSettings {
  double noise_sigma = 0.01;
  double imu_rate = 400.0;
  bool imu_enabled = true;
  int packet_cols = 16;
};

struct FullConfig {
  OdomConfig odom;
  SimSettings sim;
};

/// Loads and schema-checks a config file; path may be empty for defaults.
/// Throws ConfigError naming the offending key on any violation.
FullConfig load_config(const std::string& path);
FullConfig config_from_flat(FlatConfig& flat);

}  // namespace lodom
