#pragma once

#include <cstdint>
#include <vector>

namespace lodom {

/// Contiguous block of range-image columns, the unit the pipeline ingests.
/// Ranges are meters, 0 = invalid. start_col is in revolution coordinates;
/// t_start stamps the first column.
struct ColumnBlock {
  int start_col = 0;
  int width = 0;
  int rows = 0;
  double t_start = 0.0;
  std::vector<float> ranges;  // rows x width, row-major

  float& at(int r, int c) { return ranges[static_cast<std::size_t>(r) * width + c]; }
  float at(int r, int c) const {
    return ranges[static_cast<std::size_t>(r) * width + c];
  }
};

/// Circular range-image buffer holding exactly the latest full revolution,
/// with per-column acquisition timestamps. Pushing a block overwrites its
/// span and hands back whatever was stored there one revolution earlier so
/// it can be fused into the map.
class SweepBuffer {
 public:
  struct Ejected {
    int start_col = 0;  // revolution coordinates of the first ejected column
    int width = 0;
    int rows = 0;
    std::vector<float> ranges;     // rows x width, row-major
    std::vector<double> col_times; // width

    bool empty() const { return width == 0; }
    float at(int r, int c) const {
      return ranges[static_cast<std::size_t>(r) * width + c];
    }
  };

  enum class PushStatus { kOk, kGap };

  struct PushResult {
    PushStatus status = PushStatus::kOk;
    int expected_col = 0;  // populated on kGap
    int received_col = 0;
  };

  SweepBuffer() = default;
  SweepBuffer(int rows, int cols, double firing_interval);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double firing_interval() const { return firing_interval_; }

  /// Most recently written column, -1 before the first push.
  int head() const { return head_; }
  /// Total columns ever pushed.
  std::int64_t total_cols() const { return total_cols_; }
  /// True once a full revolution has been stored.
  bool warm() const { return total_cols_ >= cols_; }

  /// Column the next block must start at.
  int expected_col() const {
    return head_ < 0 ? 0 : (head_ + 1) % cols_;
  }

  float range(int r, int c) const {
    return ranges_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const float* row(int r) const {
    return ranges_.data() + static_cast<std::size_t>(r) * cols_;
  }
  double column_time(int c) const { return col_times_[c]; }

  /// Pushes a contiguous block. On success the overwritten revolution-old
  /// span is copied into `ejected` (empty during the first revolution). A
  /// block that does not start at expected_col() returns kGap and leaves
  /// the buffer untouched; the gap policy lives with the caller.
  PushResult push(const ColumnBlock& block, Ejected& ejected);

 private:
  int rows_ = 0;
  int cols_ = 0;
  double firing_interval_ = 0.0;
  std::vector<float> ranges_;     // rows x cols, row-major
  std::vector<double> col_times_; // cols
  int head_ = -1;
  std::int64_t total_cols_ = 0;
};

}  // namespace lodom
