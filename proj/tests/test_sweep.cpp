#include <doctest.h>

#include <random>
#include <vector>

#include "lodom/sweep_buffer.hpp"

using namespace lodom;

TEST_SUITE_BEGIN("sweep");

namespace {

constexpr int kRows = 8;
constexpr int kCols = 64;
constexpr double kDt = 0.1 / kCols;

ColumnBlock make_block(int start_col, int width, double t_start,
                       std::uint32_t tag) {
  ColumnBlock b;
  b.start_col = start_col;
  b.width = width;
  b.rows = kRows;
  b.t_start = t_start;
  b.ranges.resize(static_cast<std::size_t>(kRows) * width);
  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < width; ++c) {
      b.at(r, c) = 1.0f + 0.001f * tag + 0.01f * r + 0.0001f * c;
    }
  }
  return b;
}

/// Non-circular reference: an infinite tape of columns; the buffer state
/// equals the last kCols columns, and everything older must have been
/// ejected exactly once.
struct Tape {
  std::vector<std::vector<float>> cols;  // per absolute column, kRows values
  std::vector<double> times;

  void append(const ColumnBlock& b) {
    for (int c = 0; c < b.width; ++c) {
      std::vector<float> col(kRows);
      for (int r = 0; r < kRows; ++r) col[r] = b.at(r, c);
      cols.push_back(col);
      times.push_back(b.t_start + c * kDt);
    }
  }
};

}  // namespace

TEST_CASE("cold start: ejected span is empty and head advances") {
  SweepBuffer buf(kRows, kCols, kDt);
  SweepBuffer::Ejected ejected;
  const auto result = buf.push(make_block(0, kCols / 4, 0.0, 1), ejected);
  CHECK(result.status == SweepBuffer::PushStatus::kOk);
  CHECK(ejected.empty());
  CHECK(buf.head() == kCols / 4 - 1);
  CHECK(!buf.warm());
}

TEST_CASE("warm buffer ejects the data written one revolution earlier") {
  SweepBuffer buf(kRows, kCols, kDt);
  SweepBuffer::Ejected ejected;
  const int w = kCols / 4;
  std::vector<ColumnBlock> history;
  for (int i = 0; i < 4; ++i) {
    history.push_back(make_block(i * w % kCols, w, i * w * kDt, i));
    buf.push(history.back(), ejected);
  }
  CHECK(buf.warm());
  // Fifth push overwrites block 0's span.
  const auto blk = make_block(0, w, 4 * w * kDt, 4);
  const auto result = buf.push(blk, ejected);
  CHECK(result.status == SweepBuffer::PushStatus::kOk);
  REQUIRE(ejected.width == w);
  CHECK(ejected.start_col == 0);
  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < w; ++c) {
      CHECK(ejected.at(r, c) == history[0].at(r, c));
      CHECK(ejected.col_times[c] == doctest::Approx(c * kDt).epsilon(1e-12));
    }
  }
}

TEST_CASE("eight 1/8-sweep pushes equal one full-sweep write bit-identically") {
  SweepBuffer partial(kRows, kCols, kDt);
  SweepBuffer full(kRows, kCols, kDt);
  SweepBuffer::Ejected ejected;

  ColumnBlock whole = make_block(0, kCols, 0.0, 9);
  full.push(whole, ejected);

  const int w = kCols / 8;
  for (int i = 0; i < 8; ++i) {
    ColumnBlock part;
    part.start_col = i * w;
    part.width = w;
    part.rows = kRows;
    part.t_start = i * w * kDt;
    part.ranges.resize(static_cast<std::size_t>(kRows) * w);
    for (int r = 0; r < kRows; ++r) {
      for (int c = 0; c < w; ++c) part.at(r, c) = whole.at(r, i * w + c);
    }
    partial.push(part, ejected);
  }

  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < kCols; ++c) {
      CHECK(partial.range(r, c) == full.range(r, c));
    }
  }
}

TEST_CASE("non-contiguous block returns a gap error without mutating") {
  SweepBuffer buf(kRows, kCols, kDt);
  SweepBuffer::Ejected ejected;
  buf.push(make_block(0, 16, 0.0, 1), ejected);
  const auto result = buf.push(make_block(24, 16, 24 * kDt, 2), ejected);
  CHECK(result.status == SweepBuffer::PushStatus::kGap);
  CHECK(result.expected_col == 16);
  CHECK(result.received_col == 24);
  CHECK(buf.head() == 15);
  CHECK(buf.total_cols() == 16);
}

TEST_CASE("column times: t_c = t_0 + c * dt") {
  SweepBuffer buf(kRows, kCols, kDt);
  SweepBuffer::Ejected ejected;
  buf.push(make_block(0, kCols, 0.5, 1), ejected);
  CHECK(buf.column_time(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(buf.column_time(kCols - 1) ==
        doctest::Approx(0.5 + (kCols - 1) * kDt).epsilon(1e-9));
  for (int c = 1; c < kCols; ++c) {
    CHECK(buf.column_time(c) - buf.column_time(c - 1) ==
          doctest::Approx(kDt).epsilon(1e-9));
  }
}

TEST_CASE("revolution equivalence over random contiguous partitions") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    SweepBuffer buf(kRows, kCols, kDt);
    Tape tape;
    SweepBuffer::Ejected ejected;

    int abs_col = 0;
    std::uint32_t tag = 0;
    const int total = 3 * kCols;
    while (abs_col < total) {
      const int remaining = total - abs_col;
      const int width = std::min<int>(1 + static_cast<int>(rng() % 16), remaining);
      const auto blk =
          make_block(abs_col % kCols, width, abs_col * kDt, tag++);
      tape.append(blk);
      const auto result = buf.push(blk, ejected);
      REQUIRE(result.status == SweepBuffer::PushStatus::kOk);

      // Ejection conservation: ejected data must equal the tape content
      // exactly one revolution before the overwritten span.
      if (!ejected.empty()) {
        const int eject_abs = abs_col + (width - ejected.width) - kCols;
        REQUIRE(eject_abs >= 0);
        for (int c = 0; c < ejected.width; ++c) {
          for (int r = 0; r < kRows; ++r) {
            CHECK(ejected.at(r, c) == tape.cols[eject_abs + c][r]);
          }
          CHECK(ejected.col_times[c] ==
                doctest::Approx(tape.times[eject_abs + c]).epsilon(1e-12));
        }
      }
      abs_col += width;
    }

    // Buffer equals the last kCols columns of the tape.
    for (int c = 0; c < kCols; ++c) {
      const int abs = total - kCols + c;
      const int rev = abs % kCols;
      for (int r = 0; r < kRows; ++r) {
        CHECK(buf.range(r, rev) == tape.cols[abs][r]);
      }
    }
  }
}

TEST_SUITE_END();
