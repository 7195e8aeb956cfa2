#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lodom/config.hpp"
#include "lodom/metrics.hpp"
#include "lodom/sim.hpp"

namespace lodom::cli {

// Exit codes (stable contract):
//   0 success, 2 unreadable input, 3 config schema violation,
//   4 mid-stream framing error (partial outputs are flushed first),
//   5 evaluation impossible (too few associated pose pairs).
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitBadConfig = 3;
inline constexpr int kExitFraming = 4;
inline constexpr int kExitEvalImpossible = 5;

struct RunOptions {
  std::string config_path;
  std::string input_path;  // packet file; empty when scene is set
  std::string imu_path;    // optional IMU stream for file input
  std::string scene;       // built-in dataset name
  std::string out_dir = ".";
  double duration = 0.0;  // sim input only; 0 = natural duration
  std::uint64_t seed = 0;
  int workers = -1;  // -1 = config value
  int divisor = -1;
  bool save_pano = false;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<sim::TimedPose> trajectory;
  int exit_code = kExitOk;
};

/// Runs odometry over a packet file or a generated stream; when out_dir is
/// non-empty writes trajectory.tum, metrics.txt and optionally
/// pano_final.lpan there.
RunResult run_odometry(const RunOptions& opts);

struct EvalResult {
  double rms_ape = 0.0;          // after rigid (Umeyama) alignment
  double endpoint_error = 0.0;   // unaligned, at the estimate's last stamp
  int pairs = 0;
};

/// Associates by nearest timestamp within max_dt (<= 0 picks half the
/// estimate's median spacing) and evaluates against ground truth.
/// Throws std::runtime_error when fewer than 3 pairs associate.
EvalResult evaluate_trajectories(const std::vector<sim::TimedPose>& estimate,
                                 const std::vector<sim::TimedPose>& truth,
                                 double max_dt = 0.0);

/// argv-style entry point used by the lodom binary and the tests.
int run_main(const std::vector<std::string>& args);

}  // namespace lodom::cli
