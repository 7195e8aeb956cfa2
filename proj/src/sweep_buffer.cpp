#include "lodom/sweep_buffer.hpp"

#include <cassert>
#include <stdexcept>

namespace lodom {

SweepBuffer::SweepBuffer(int rows, int cols, double firing_interval)
    : rows_(rows), cols_(cols), firing_interval_(firing_interval) {
  if (rows < 2 || cols < 8 || firing_interval <= 0.0) {
    throw std::invalid_argument("SweepBuffer: invalid geometry");
  }
  ranges_.assign(static_cast<std::size_t>(rows) * cols, 0.0f);
  col_times_.assign(cols, 0.0);
}

SweepBuffer::PushResult SweepBuffer::push(const ColumnBlock& block,
                                          Ejected& ejected) {
  assert(block.rows == rows_);
  assert(block.width >= 1 && block.width <= cols_);

  PushResult result;
  const int expect = expected_col();
  if (block.start_col != expect) {
    result.status = PushStatus::kGap;
    result.expected_col = expect;
    result.received_col = block.start_col;
    ejected.width = 0;
    return result;
  }

  // Columns overwritten by this push that already held a full-revolution-old
  // observation get ejected. With contiguous pushes that is every column of
  // the block once warm, and a suffix of the block while warming up.
  const std::int64_t first_abs = total_cols_;
  const std::int64_t eject_from = std::max<std::int64_t>(first_abs, cols_);
  const int eject_width =
      static_cast<int>(std::max<std::int64_t>(0, first_abs + block.width - eject_from));

  ejected.rows = rows_;
  ejected.width = eject_width;
  if (eject_width > 0) {
    const int offset = static_cast<int>(eject_from - first_abs);
    ejected.start_col = (block.start_col + offset) % cols_;
    ejected.ranges.resize(static_cast<std::size_t>(rows_) * eject_width);
    ejected.col_times.resize(eject_width);
    for (int r = 0; r < rows_; ++r) {
      float* dst = ejected.ranges.data() + static_cast<std::size_t>(r) * eject_width;
      const float* src = ranges_.data() + static_cast<std::size_t>(r) * cols_;
      for (int c = 0; c < eject_width; ++c) {
        dst[c] = src[(ejected.start_col + c) % cols_];
      }
    }
    for (int c = 0; c < eject_width; ++c) {
      ejected.col_times[c] = col_times_[(ejected.start_col + c) % cols_];
    }
  }

  for (int r = 0; r < rows_; ++r) {
    float* dst = ranges_.data() + static_cast<std::size_t>(r) * cols_;
    const float* src =
        block.ranges.data() + static_cast<std::size_t>(r) * block.width;
    for (int c = 0; c < block.width; ++c) {
      dst[(block.start_col + c) % cols_] = src[c];
    }
  }
  for (int c = 0; c < block.width; ++c) {
    col_times_[(block.start_col + c) % cols_] =
        block.t_start + c * firing_interval_;
  }

  head_ = (block.start_col + block.width - 1) % cols_;
  total_cols_ += block.width;
  return result;
}

}  // namespace lodom
