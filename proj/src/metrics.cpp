#include "lodom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lodom {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  if (rank < 1) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

void MetricsCollector::add(const OdomOutput& out) {
  ++blocks_;
  feature_ms_.push_back(out.timing.feature_us / 1000.0);
  fuse_ms_.push_back(out.timing.fuse_us / 1000.0);
  total_ms_.push_back(out.timing.total_us / 1000.0);
  if (out.solved || out.report.candidate_count > 0) {
    associate_ms_.push_back(out.timing.associate_us / 1000.0);
    solve_ms_.push_back(out.timing.solve_us / 1000.0);
    q_.push_back(out.q);
  }
  if (!out.solved && out.report.status == SolveReport::Status::kDegenerate) {
    ++degenerate_;
  }
  if (out.gap) ++gaps_;
  if (out.relocated) ++relocations_;
  positions_.push_back(out.pose.translation);
  if (blocks_ == 1) first_time_ = out.time;
  last_time_ = out.time;
}

namespace {

RunMetrics::StagePercentiles stage_stats(const std::vector<double>& ms) {
  RunMetrics::StagePercentiles s;
  if (ms.empty()) return s;
  s.p50 = percentile(ms, 50.0);
  s.p90 = percentile(ms, 90.0);
  s.p99 = percentile(ms, 99.0);
  double sum = 0.0;
  for (double v : ms) sum += v;
  s.mean = sum / static_cast<double>(ms.size());
  return s;
}

}  // namespace

RunMetrics MetricsCollector::finalize() const {
  RunMetrics m;
  m.blocks = blocks_;
  if (blocks_ == 0) return m;
  m.duration_s = last_time_ - first_time_;
  m.output_rate_hz =
      m.duration_s > 0.0 ? static_cast<double>(blocks_ - 1) / m.duration_s : 0.0;
  double dist = 0.0;
  for (std::size_t i = 1; i < positions_.size(); ++i) {
    dist += (positions_[i] - positions_[i - 1]).norm();
  }
  m.total_distance_m = dist;
  m.endpoint_error_m = (positions_.back() - positions_.front()).norm();
  m.drift_pct = dist > 0.0 ? 100.0 * m.endpoint_error_m / dist : 0.0;
  m.relocations = relocations_;
  m.degenerate_blocks = degenerate_;
  m.gap_blocks = gaps_;
  if (!q_.empty()) {
    m.q_min = *std::min_element(q_.begin(), q_.end());
    double sum = 0.0;
    for (double q : q_) sum += q;
    m.q_mean = sum / static_cast<double>(q_.size());
  }
  m.feature = stage_stats(feature_ms_);
  m.associate = stage_stats(associate_ms_);
  m.solve = stage_stats(solve_ms_);
  m.fuse = stage_stats(fuse_ms_);
  m.total = stage_stats(total_ms_);
  return m;
}

std::string metrics_to_string(const RunMetrics& m, std::uint64_t seed,
                              int divisor, int workers) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "# lodom metrics v1\n";
  os << "schema = 1\n";
  os << "seed = " << seed << "\n";
  os << "divisor = " << divisor << "\n";
  os << "workers = " << workers << "\n";
  os << "blocks = " << m.blocks << "\n";
  os << "duration_s = " << m.duration_s << "\n";
  os << "output_rate_hz = " << m.output_rate_hz << "\n";
  os << "total_distance_m = " << m.total_distance_m << "\n";
  os << "endpoint_error_m = " << m.endpoint_error_m << "\n";
  os << "drift_pct = " << m.drift_pct << "\n";
  os << "relocations = " << m.relocations << "\n";
  os << "degenerate_blocks = " << m.degenerate_blocks << "\n";
  os << "gap_blocks = " << m.gap_blocks << "\n";
  os << "q_min = " << m.q_min << "\n";
  os << "q_mean = " << m.q_mean << "\n";
  os << "stages = feature associate solve fuse total\n";
  auto stage = [&os](const char* name, const RunMetrics::StagePercentiles& s) {
    os << name << "_p50_ms = " << s.p50 << "\n";
    os << name << "_p90_ms = " << s.p90 << "\n";
    os << name << "_p99_ms = " << s.p99 << "\n";
    os << name << "_mean_ms = " << s.mean << "\n";
  };
  stage("feature", m.feature);
  stage("associate", m.associate);
  stage("solve", m.solve);
  stage("fuse", m.fuse);
  stage("total", m.total);
  return os.str();
}

void write_metrics(const std::string& path, const RunMetrics& m,
                   std::uint64_t seed, int divisor, int workers) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << metrics_to_string(m, seed, divisor, workers);
}

}  // namespace lodom
