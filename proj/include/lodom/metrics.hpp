#pragma once

#include <string>
#include <vector>

#include "lodom/pipeline.hpp"

namespace lodom {

/// Per-run summary built from the per-block outputs. Every declared key is
/// always written (nan when a stage never ran), so parsers never branch on
/// presence.
struct RunMetrics {
  std::uint64_t blocks = 0;
  double duration_s = 0.0;
  double output_rate_hz = 0.0;
  double total_distance_m = 0.0;
  double endpoint_error_m = 0.0;  // |last - first| position
  double drift_pct = 0.0;         // endpoint error / distance * 100
  int relocations = 0;
  int degenerate_blocks = 0;
  int gap_blocks = 0;
  double q_min = std::numeric_limits<double>::quiet_NaN();
  double q_mean = std::numeric_limits<double>::quiet_NaN();

  // Percentiles in milliseconds per stage, nearest-rank.
  struct StagePercentiles {
    double p50 = std::numeric_limits<double>::quiet_NaN();
    double p90 = std::numeric_limits<double>::quiet_NaN();
    double p99 = std::numeric_limits<double>::quiet_NaN();
    double mean = std::numeric_limits<double>::quiet_NaN();
  };
  StagePercentiles feature, associate, solve, fuse, total;
};

/// Nearest-rank percentile of an unsorted sample; p in (0, 100].
double percentile(std::vector<double> values, double p);

class MetricsCollector {
 public:
  void add(const OdomOutput& out);
  RunMetrics finalize() const;

 private:
  std::vector<double> feature_ms_, associate_ms_, solve_ms_, fuse_ms_,
      total_ms_;
  std::vector<double> q_;
  std::vector<Eigen::Vector3d> positions_;
  double first_time_ = 0.0, last_time_ = 0.0;
  std::uint64_t blocks_ = 0;
  int degenerate_ = 0, gaps_ = 0, relocations_ = 0;
};

/// Flat key/value metrics document; stable key set and order.
void write_metrics(const std::string& path, const RunMetrics& m,
                   std::uint64_t seed, int divisor, int workers);
std::string metrics_to_string(const RunMetrics& m, std::uint64_t seed,
                              int divisor, int workers);

}  // namespace lodom
