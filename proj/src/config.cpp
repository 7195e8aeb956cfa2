#include "lodom/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lodom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

FlatConfig FlatConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_string(ss.str(), path);
}

FlatConfig FlatConfig::parse_string(const std::string& text,
                                    const std::string& name) {
  FlatConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(name + ":" + std::to_string(lineno) +
                          ": malformed section header: " + line);
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": expected key = value: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full)) {
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": duplicate key: " + full);
    }
    cfg.values_[full] = value;
    cfg.consumed_[full] = false;
  }
  return cfg;
}

int FlatConfig::get_int(const std::string& key, int def) {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  consumed_[key] = true;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError(key + ": expected an integer, got '" + it->second + "'");
  }
}

double FlatConfig::get_double(const std::string& key, double def) {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  consumed_[key] = true;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError(key + ": expected a number, got '" + it->second + "'");
  }
}

bool FlatConfig::get_bool(const std::string& key, bool def) {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  consumed_[key] = true;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + it->second + "'");
}

std::string FlatConfig::get_string(const std::string& key,
                                   const std::string& def) {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  consumed_[key] = true;
  return it->second;
}

std::vector<std::string> FlatConfig::unconsumed() const {
  std::vector<std::string> out;
  for (const auto& [key, used] : consumed_) {
    if (!used) out.push_back(key);
  }
  return out;
}

FullConfig config_from_flat(FlatConfig& flat) {
  FullConfig full;
  OdomConfig& c = full.odom;

  c.lidar.rows = flat.get_int("lidar.rows", c.lidar.rows);
  c.lidar.cols = flat.get_int("lidar.cols", c.lidar.cols);
  c.lidar.vertical_fov =
      flat.get_double("lidar.vertical_fov_deg", 45.0) * M_PI / 180.0;
  c.lidar.elevation_offset =
      flat.get_double("lidar.elevation_offset_deg", 0.0) * M_PI / 180.0;
  c.lidar.sweep_period = flat.get_double("lidar.sweep_period", c.lidar.sweep_period);
  c.lidar.min_range = flat.get_double("lidar.min_range", c.lidar.min_range);

  c.pano.rows = flat.get_int("pano.rows", c.pano.rows);
  c.pano.cols = flat.get_int("pano.cols", c.pano.cols);
  c.pano.vertical_fov =
      flat.get_double("pano.vertical_fov_deg", 90.0) * M_PI / 180.0;
  c.pano.k_max = flat.get_int("pano.k_max", c.pano.k_max);
  c.pano.fuse_tol = flat.get_double("pano.fuse_tol", c.pano.fuse_tol);

  c.grid.cell_rows = flat.get_int("grid.cell_rows", c.grid.cell_rows);
  c.grid.cell_cols = flat.get_int("grid.cell_cols", c.grid.cell_cols);
  c.grid.max_smooth = flat.get_double("grid.max_smooth", c.grid.max_smooth);
  c.grid.max_var = flat.get_double("grid.max_var", c.grid.max_var);
  c.grid.nms = flat.get_bool("grid.nms", c.grid.nms);

  c.icp.assoc_tol = flat.get_double("icp.assoc_tol", c.icp.assoc_tol);
  c.icp.win_rows = flat.get_int("icp.win_rows", 0);
  c.icp.win_cols = flat.get_int("icp.win_cols", 0);
  c.icp.huber_delta = flat.get_double("icp.huber_delta", c.icp.huber_delta);
  c.icp.cov_eps = flat.get_double("icp.cov_eps", c.icp.cov_eps);
  c.icp.max_outer = flat.get_int("icp.max_outer", c.icp.max_outer);
  c.icp.max_inner = flat.get_int("icp.max_inner", c.icp.max_inner);
  c.icp.lm_lambda = flat.get_double("icp.lm_lambda", c.icp.lm_lambda);
  c.icp.step_tol = flat.get_double("icp.step_tol", c.icp.step_tol);
  c.icp.min_matches = flat.get_int("icp.min_matches", c.icp.min_matches);
  c.icp.cond_warn = flat.get_double("icp.cond_warn", c.icp.cond_warn);
  c.icp.chi2_gate = flat.get_double("icp.chi2_gate", c.icp.chi2_gate);

  c.q_threshold = flat.get_double("odom.q_threshold", c.q_threshold);
  c.divisor = flat.get_int("odom.divisor", c.divisor);
  c.workers = flat.get_int("odom.workers", c.workers);
  c.kernels = flat.get_string("odom.kernels", c.kernels);

  full.sim.noise_sigma = flat.get_double("sim.noise_sigma", full.sim.noise_sigma);
  full.sim.imu_rate = flat.get_double("sim.imu_rate", full.sim.imu_rate);
  full.sim.imu_enabled = flat.get_bool("sim.imu", full.sim.imu_enabled);
  full.sim.packet_cols = flat.get_int("sim.packet_cols", full.sim.packet_cols);

  const auto unknown = flat.unconsumed();
  if (!unknown.empty()) {
    throw ConfigError("unknown config key: " + unknown.front());
  }
  const auto errors = c.validate();
  if (!errors.empty()) {
    throw ConfigError(errors.front());
  }
  if (full.sim.packet_cols < 1 || c.lidar.cols % full.sim.packet_cols != 0) {
    throw ConfigError("sim.packet_cols: must divide lidar.cols");
  }
  if (full.sim.imu_rate <= 0) {
    throw ConfigError("sim.imu_rate: must be > 0");
  }
  if (full.sim.noise_sigma < 0) {
    throw ConfigError("sim.noise_sigma: must be >= 0");
  }
  return full;
}

FullConfig load_config(const std::string& path) {
  if (path.empty()) {
    FlatConfig empty;
    return config_from_flat(empty);
  }
  FlatConfig flat = FlatConfig::parse_file(path);
  return config_from_flat(flat);
}

}  // namespace lodom
