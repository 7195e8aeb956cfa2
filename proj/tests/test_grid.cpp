#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lodom/feature_grid.hpp"
#include "lodom/kernels.hpp"
#include "lodom/sweep_buffer.hpp"
#include "lodom/thread_pool.hpp"

using namespace lodom;

TEST_SUITE_BEGIN("grid");

namespace {

// Naive double-precision oracle for the smoothness/variance scoring.
struct NaiveScore {
  bool valid = false;
  double smoothness = 0.0;
  double variance = 0.0;
};

NaiveScore naive_score(const std::vector<float>& px, int cell_rows,
                       int cell_cols) {
  NaiveScore out;
  const double rm = px[static_cast<std::size_t>(cell_rows / 2) * cell_cols +
                       cell_cols / 2];
  if (!(rm > 0)) return out;
  int valid = 0;
  double dev = 0;
  std::vector<double> vals;
  for (float v : px) {
    if (!(v > 0)) continue;
    ++valid;
    dev += v / rm - 1.0;
    vals.push_back(v);
  }
  if (2 * valid < cell_rows * cell_cols) return out;
  out.valid = true;
  out.smoothness = std::abs(dev) / valid;
  double mean = 0;
  for (double v : vals) mean += v;
  mean /= valid;
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  out.variance = var / valid;
  return out;
}

// Naive mean/scatter oracle over the unprojected cell pixels.
Gaussian3 naive_stats(const SweepBuffer& sweep, const LidarModel& model,
                      int row0, int col0, int cell_rows, int cell_cols) {
  std::vector<Eigen::Vector3d> pts;
  for (int r = 0; r < cell_rows; ++r) {
    for (int c = 0; c < cell_cols; ++c) {
      const float range = sweep.range(row0 + r, col0 + c);
      if (!(range > 0)) continue;
      pts.push_back(model.unproject(row0 + r, col0 + c, range));
    }
  }
  Gaussian3 g;
  g.weight = static_cast<int>(pts.size());
  if (pts.empty()) return g;
  for (const auto& p : pts) g.mean += p;
  g.mean /= static_cast<double>(pts.size());
  for (const auto& p : pts) {
    const Eigen::Vector3d d = p - g.mean;
    g.covariance += d * d.transpose();
  }
  g.covariance /= static_cast<double>(pts.size());
  return g;
}

SweepBuffer random_sweep(const LidarModel& model, std::mt19937_64& rng,
                         double invalid_frac = 0.15) {
  SweepBuffer sweep(model.rows(), model.cols(), model.firing_interval());
  ColumnBlock blk;
  blk.start_col = 0;
  blk.width = model.cols();
  blk.rows = model.rows();
  blk.t_start = 0;
  blk.ranges.resize(static_cast<std::size_t>(model.rows()) * model.cols());
  std::uniform_real_distribution<float> r(0.6f, 100.0f);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& v : blk.ranges) v = u(rng) < invalid_frac ? 0.0f : r(rng);
  SweepBuffer::Ejected ejected;
  sweep.push(blk, ejected);
  return sweep;
}

}  // namespace

TEST_CASE("flat cell scores zero smoothness and variance") {
  std::vector<float> px(2 * 16, 4.0f);
  const auto score = score_cell(px.data(), 2, 16);
  REQUIRE(score.has_value());
  CHECK(score->smoothness == doctest::Approx(0.0));
  CHECK(score->range_variance == doctest::Approx(0.0));
  CHECK(score->valid == 32);
}

TEST_CASE("hand-evaluated smoothness: ranges {2,2,4} with midpoint 2") {
  // 1x3 cell: middle pixel is (0,1) = 2. s = |0 + 0 + 1| / 3 = 1/3.
  std::vector<float> px = {2.0f, 2.0f, 4.0f};
  const auto score = score_cell(px.data(), 1, 3);
  REQUIRE(score.has_value());
  CHECK(score->smoothness == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("all-invalid and invalid-midpoint cells are invalid") {
  std::vector<float> px(2 * 16, 0.0f);
  CHECK(!score_cell(px.data(), 2, 16).has_value());
  std::vector<float> px2(2 * 16, 3.0f);
  px2[1 * 16 + 8] = 0.0f;  // midpoint invalid
  CHECK(!score_cell(px2.data(), 2, 16).has_value());
  // fewer than half valid
  std::vector<float> px3(2 * 16, 0.0f);
  for (int i = 0; i < 15; ++i) px3[i] = 2.0f;
  px3[1 * 16 + 8] = 2.0f;  // midpoint valid, total 16 of 32 -> still invalid
  CHECK(!score_cell(px3.data(), 2, 16).has_value());
}

TEST_CASE("smoothness is scale free") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<float> r(1.0f, 50.0f);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> px(2 * 16);
    for (auto& v : px) v = r(rng);
    const auto a = score_cell(px.data(), 2, 16);
    std::vector<float> scaled = px;
    for (auto& v : scaled) v *= 3.5f;
    const auto b = score_cell(scaled.data(), 2, 16);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->smoothness == doctest::Approx(b->smoothness).epsilon(1e-5));
  }
}

TEST_CASE("scoring matches the naive oracle within 1e-9 over random cells") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<float> r(0.5f, 120.0f);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<float> px(2 * 16);
    for (auto& v : px) v = u(rng) < 0.2 ? 0.0f : r(rng);
    const auto got = score_cell(px.data(), 2, 16);
    const auto want = naive_score(px, 2, 16);
    REQUIRE(got.has_value() == want.valid);
    if (want.valid) {
      CHECK(std::abs(got->smoothness - want.smoothness) <
            1e-9 * (1.0 + std::abs(want.smoothness)));
      CHECK(std::abs(got->range_variance - want.variance) <
            1e-9 * (1.0 + std::abs(want.variance)));
    }
  }
}

TEST_CASE("cell gaussians match the brute-force oracle within 1e-9") {
  const LidarModel model(8, 64, M_PI / 4, 0.1);
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const SweepBuffer sweep = random_sweep(model, rng);
    for (int gr = 0; gr < 4; ++gr) {
      for (int gc = 0; gc < 4; ++gc) {
        const Gaussian3 got =
            compute_cell_stats(sweep, model, gr * 2, gc * 16, 2, 16);
        const Gaussian3 want = naive_stats(sweep, model, gr * 2, gc * 16, 2, 16);
        CHECK(got.weight == want.weight);
        if (want.weight > 0) {
          CHECK((got.mean - want.mean).norm() < 1e-9);
          CHECK((got.covariance - want.covariance).norm() < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("single pixel gives point mass; planar cell is rank deficient") {
  const LidarModel model(8, 64, M_PI / 4, 0.1);
  SweepBuffer sweep(8, 64, model.firing_interval());
  ColumnBlock blk;
  blk.start_col = 0;
  blk.width = 64;
  blk.rows = 8;
  blk.ranges.assign(8 * 64, 0.0f);
  // One valid pixel in cell (0, 0)
  blk.ranges[0 * 64 + 3] = 7.0f;
  // Cell (2, 0): all pixels on the plane x = 4 (flat wall ahead)
  for (int r = 4; r < 6; ++r) {
    for (int c = 0; c < 16; ++c) {
      const Eigen::Vector3d dir = model.beam_dir(r, c);
      blk.ranges[static_cast<std::size_t>(r) * 64 + c] =
          static_cast<float>(4.0 / dir.x());
    }
  }
  SweepBuffer::Ejected ejected;
  sweep.push(blk, ejected);

  const Gaussian3 point = compute_cell_stats(sweep, model, 0, 0, 2, 16);
  CHECK(point.weight == 1);
  CHECK((point.mean - model.unproject(0, 3, 7.0)).norm() < 1e-12);
  CHECK(point.covariance.norm() < 1e-12);

  const Gaussian3 planar = compute_cell_stats(sweep, model, 4, 0, 2, 16);
  CHECK(planar.weight == 32);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(planar.covariance);
  CHECK(es.eigenvalues()(0) < 1e-6 * es.eigenvalues()(2));
}

namespace {

// Brute-force filter oracle mirroring the documented NMS semantics.
std::vector<std::vector<bool>> naive_filter(const FeatureGrid& grid,
                                            float max_s, float max_v,
                                            bool nms) {
  std::vector<std::vector<bool>> pass(grid.rows(),
                                      std::vector<bool>(grid.cols(), false));
  for (int gr = 0; gr < grid.rows(); ++gr) {
    bool left = false;
    for (int gc = 0; gc < grid.cols(); ++gc) {
      bool p = grid.scored(gr, gc) && grid.at(gr, gc).smoothness <= max_s &&
               grid.at(gr, gc).range_variance <= max_v;
      if (p && nms) {
        if (left && grid.at(gr, gc - 1).smoothness <= grid.at(gr, gc).smoothness)
          p = false;
        else if (gc + 1 < grid.cols() && grid.scored(gr, gc + 1) &&
                 grid.at(gr, gc + 1).smoothness < grid.at(gr, gc).smoothness)
          p = false;
      }
      pass[gr][gc] = p;
      left = p;
    }
  }
  return pass;
}

}  // namespace

TEST_CASE("filter with nms on a flat grid selects every other cell") {
  const LidarModel model(8, 64, M_PI / 4, 0.1);
  SweepBuffer sweep(8, 64, model.firing_interval());
  ColumnBlock blk;
  blk.start_col = 0;
  blk.width = 64;
  blk.rows = 8;
  blk.ranges.assign(8 * 64, 5.0f);  // all equal -> all scores are 0
  SweepBuffer::Ejected ejected;
  sweep.push(blk, ejected);

  FeatureGrid grid(8, 64, 2, 16);
  grid.score_span(sweep, model, 0, 64);

  const int no_nms = grid.filter(0.01f, 0.1f, false);
  CHECK(no_nms == 4 * 4);  // all 16 cells pass the thresholds

  const int with_nms = grid.filter(0.01f, 0.1f, true);
  CHECK(with_nms == 4 * 2);  // ties break toward the lower column
  for (int gr = 0; gr < 4; ++gr) {
    CHECK(grid.at(gr, 0).state == CellState::kCandidate);
    CHECK(grid.at(gr, 1).state == CellState::kInvalid);
    CHECK(grid.at(gr, 2).state == CellState::kCandidate);
    CHECK(grid.at(gr, 3).state == CellState::kInvalid);
  }
}

TEST_CASE("zero thresholds keep only exactly-flat cells") {
  const LidarModel model(8, 64, M_PI / 4, 0.1);
  std::mt19937_64 rng(43);
  SweepBuffer sweep = random_sweep(model, rng, 0.0);
  FeatureGrid grid(8, 64, 2, 16);
  grid.score_span(sweep, model, 0, 64);
  const int n = grid.filter(0.0f, 0.0f, false);
  for (int gr = 0; gr < grid.rows(); ++gr) {
    for (int gc = 0; gc < grid.cols(); ++gc) {
      if (grid.at(gr, gc).state == CellState::kCandidate) {
        CHECK(grid.at(gr, gc).smoothness == 0.0f);
        CHECK(grid.at(gr, gc).range_variance == 0.0f);
      }
    }
  }
  CHECK(n == 0);  // random cells are never exactly flat
}

TEST_CASE("filter matches the brute-force oracle on random grids") {
  const LidarModel model(8, 64, M_PI / 4, 0.1);
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    SweepBuffer sweep = random_sweep(model, rng, 0.3);
    FeatureGrid grid(8, 64, 2, 16);
    grid.score_span(sweep, model, 0, 64);
    for (const bool nms : {false, true}) {
      const float max_s = 0.3f, max_v = 50.0f;
      const auto want = naive_filter(grid, max_s, max_v, nms);
      FeatureGrid copy = grid;
      const int count = copy.filter(max_s, max_v, nms);
      int want_count = 0;
      for (int gr = 0; gr < grid.rows(); ++gr) {
        for (int gc = 0; gc < grid.cols(); ++gc) {
          const bool got = copy.at(gr, gc).state == CellState::kCandidate;
          CHECK(got == want[gr][gc]);
          want_count += want[gr][gc];
        }
      }
      CHECK(count == want_count);
    }
  }
}

TEST_CASE("relaxing thresholds never removes candidates (nms off)") {
  const LidarModel model(8, 64, M_PI / 4, 0.1);
  std::mt19937_64 rng(53);
  SweepBuffer sweep = random_sweep(model, rng, 0.1);
  FeatureGrid grid(8, 64, 2, 16);
  grid.score_span(sweep, model, 0, 64);

  FeatureGrid tight = grid;
  FeatureGrid loose = grid;
  tight.filter(0.05f, 1.0f, false);
  loose.filter(0.10f, 2.0f, false);
  for (int gr = 0; gr < grid.rows(); ++gr) {
    for (int gc = 0; gc < grid.cols(); ++gc) {
      if (tight.at(gr, gc).state == CellState::kCandidate) {
        CHECK(loose.at(gr, gc).state == CellState::kCandidate);
      }
    }
  }
}

TEST_CASE("scoring is deterministic and parallel-equivalent") {
  const LidarModel model(8, 64, M_PI / 4, 0.1);
  std::mt19937_64 rng(59);
  SweepBuffer sweep = random_sweep(model, rng);

  FeatureGrid a(8, 64, 2, 16), b(8, 64, 2, 16);
  a.score_span(sweep, model, 0, 64);
  ThreadPool pool(4);
  b.score_span(sweep, model, 0, 64, &pool);
  for (int gr = 0; gr < a.rows(); ++gr) {
    for (int gc = 0; gc < a.cols(); ++gc) {
      CHECK(a.at(gr, gc).smoothness == b.at(gr, gc).smoothness);
      CHECK(a.at(gr, gc).range_variance == b.at(gr, gc).range_variance);
      CHECK(a.at(gr, gc).stats.mean == b.at(gr, gc).stats.mean);
      CHECK(a.at(gr, gc).stats.covariance == b.at(gr, gc).stats.covariance);
    }
  }
}

TEST_SUITE_END();
