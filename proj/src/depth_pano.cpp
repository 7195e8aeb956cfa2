#include "lodom/depth_pano.hpp"

#include <cassert>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "lodom/kernels.hpp"
#include "lodom/thread_pool.hpp"

namespace lodom {

DepthPano::DepthPano(const LidarModel& model, int k_max, float fuse_tol)
    : model_(model), k_max_(k_max), fuse_tol_(fuse_tol) {
  if (k_max < 1 || k_max > 255) {
    throw std::invalid_argument("DepthPano: k_max must be in [1, 255]");
  }
  depth_.assign(static_cast<std::size_t>(rows()) * cols(), 0.0f);
  count_.assign(depth_.size(), 0);
}

void DepthPano::clear() {
  std::fill(depth_.begin(), depth_.end(), 0.0f);
  std::fill(count_.begin(), count_.end(), 0);
}

std::pair<float, std::uint8_t> DepthPano::fuse_rule(float d, std::uint8_t k,
                                                    float d_new, float tol,
                                                    int k_max) {
  if (k == 0) {
    // Empty pixel, or one whose counter was decremented to zero: the next
    // observation replaces it outright.
    return {d_new, 1};
  }
  if (std::abs(d_new - d) <= tol * d) {
    const float fused = (static_cast<float>(k) * d + d_new) / (k + 1);
    const int k_next = k + 1 < k_max ? k + 1 : k_max;
    return {fused, static_cast<std::uint8_t>(k_next)};
  }
  return {d, static_cast<std::uint8_t>(k - 1)};
}

void DepthPano::fuse_pixel(int r, int c, float d_new) {
  const std::size_t i = static_cast<std::size_t>(r) * cols() + c;
  const auto [d, k] = fuse_rule(depth_[i], count_[i], d_new, fuse_tol_, k_max_);
  depth_[i] = d;
  count_[i] = k;
}

namespace {

void ensure_scratch(WarpScratch& s, std::size_t n, int pano_rows) {
  s.target.resize(n);
  s.depth.resize(n);
  s.count.resize(n);
  s.row_offset.assign(pano_rows + 1, 0);
  s.order.resize(n);
}

// Counting sort of the phase-1 items by target row, stable in source index
// order; per-row application order is therefore independent of how phase 1
// or phase 2 were split over workers.
void bucket_by_row(WarpScratch& s, std::size_t n, int pano_cols,
                   int pano_rows) {
  std::fill(s.row_offset.begin(), s.row_offset.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (s.target[i] >= 0) ++s.row_offset[s.target[i] / pano_cols + 1];
  }
  for (int r = 0; r < pano_rows; ++r) s.row_offset[r + 1] += s.row_offset[r];
  std::vector<int> cursor(s.row_offset.begin(), s.row_offset.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (s.target[i] >= 0) {
      s.order[cursor[s.target[i] / pano_cols]++] = static_cast<std::int32_t>(i);
    }
  }
}

}  // namespace

int DepthPano::fuse_span(const RangeSpan& span,
                         const std::vector<Pose>& col_poses,
                         const LidarModel& sweep_model, ThreadPool* pool,
                         WarpScratch* scratch) {
  assert(static_cast<int>(col_poses.size()) == span.width);
  WarpScratch local;
  WarpScratch& s = scratch != nullptr ? *scratch : local;
  const std::size_t n = static_cast<std::size_t>(span.rows) * span.width;
  ensure_scratch(s, n, rows());

  // Phase 1: project every source pixel; disjoint writes per item.
  auto project_rows = [&](int, int rb, int re) {
    for (int r = rb; r < re; ++r) {
      const float* src = span.ranges + static_cast<std::size_t>(r) * span.stride;
      for (int c = 0; c < span.width; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * span.width + c;
        const int sc =
            span.storage_cols > 0 ? (span.start_col + c) % span.storage_cols : c;
        const float range = src[sc];
        if (!(range > 0.0f)) {
          s.target[i] = -1;
          continue;
        }
        const int sweep_col = (span.start_col + c) % sweep_model.cols();
        const Eigen::Vector3d p_pano =
            col_poses[c] * sweep_model.unproject(r, sweep_col, range);
        const auto proj = model_.project(p_pano);
        if (!proj) {
          s.target[i] = -1;
          continue;
        }
        s.target[i] = proj->row * cols() + proj->col;
        s.depth[i] = static_cast<float>(proj->range);
      }
    }
  };
  if (pool != nullptr && pool->workers() > 1) {
    pool->parallel_chunks(0, span.rows, 4, project_rows);
  } else {
    project_rows(0, 0, span.rows);
  }

  bucket_by_row(s, n, cols(), rows());
  const int fused = s.row_offset[rows()];

  // Phase 2: each pano row owns its pixels; fusion order per pixel is the
  // source index order.
  auto fuse_rows = [&](int, int rb, int re) {
    for (int pr = rb; pr < re; ++pr) {
      for (int k = s.row_offset[pr]; k < s.row_offset[pr + 1]; ++k) {
        const std::int32_t i = s.order[k];
        const std::int32_t tgt = s.target[i];
        const std::size_t pi = static_cast<std::size_t>(tgt);
        const auto [d, cnt] =
            fuse_rule(depth_[pi], count_[pi], s.depth[i], fuse_tol_, k_max_);
        depth_[pi] = d;
        count_[pi] = cnt;
      }
    }
  };
  if (pool != nullptr && pool->workers() > 1) {
    pool->parallel_chunks(0, rows(), 16, fuse_rows);
  } else {
    fuse_rows(0, 0, rows());
  }
  return fused;
}

std::optional<Gaussian3> DepthPano::window_stats(int r, int c, int win_rows,
                                                 int win_cols) const {
  const int r0 = std::max(0, r - win_rows / 2);
  const int r1 = std::min(rows(), r - win_rows / 2 + win_rows);
  int c0 = (c - win_cols / 2) % cols();
  if (c0 < 0) c0 += cols();
  const int area = (r1 - r0) * win_cols;

  const auto& cc = model_.col_cos();
  const auto& cs = model_.col_sin();
  const auto& rc = model_.row_cos();
  const auto& rs = model_.row_sin();

  const int first_len = std::min(win_cols, cols() - c0);
  const int wrap_len = win_cols - first_len;

  kernels::PointSums sums;
  for (int pr = r0; pr < r1; ++pr) {
    const float* row = depth_row(pr);
    kernels::PointSums a = kernels::point_sums(row + c0, first_len,
                                               cc.data() + c0, cs.data() + c0,
                                               rc[pr], rs[pr]);
    sums.count += a.count;
    sums.x += a.x;
    sums.y += a.y;
    sums.z += a.z;
    if (wrap_len > 0) {
      kernels::PointSums b = kernels::point_sums(row, wrap_len, cc.data(),
                                                 cs.data(), rc[pr], rs[pr]);
      sums.count += b.count;
      sums.x += b.x;
      sums.y += b.y;
      sums.z += b.z;
    }
  }
  if (2 * sums.count <= area) return std::nullopt;

  Gaussian3 g;
  g.weight = sums.count;
  const double n = sums.count;
  g.mean = Eigen::Vector3d(sums.x / n, sums.y / n, sums.z / n);

  kernels::ScatterSums sc;
  for (int pr = r0; pr < r1; ++pr) {
    const float* row = depth_row(pr);
    kernels::ScatterSums a = kernels::scatter_sums(
        row + c0, first_len, cc.data() + c0, cs.data() + c0, rc[pr], rs[pr],
        g.mean.x(), g.mean.y(), g.mean.z());
    for (int k = 0; k < 6; ++k) sc.m[k] += a.m[k];
    if (wrap_len > 0) {
      kernels::ScatterSums b = kernels::scatter_sums(
          row, wrap_len, cc.data(), cs.data(), rc[pr], rs[pr], g.mean.x(),
          g.mean.y(), g.mean.z());
      for (int k = 0; k < 6; ++k) sc.m[k] += b.m[k];
    }
  }
  g.covariance << sc.m[0], sc.m[1], sc.m[2],  //
      sc.m[1], sc.m[3], sc.m[4],              //
      sc.m[2], sc.m[4], sc.m[5];
  g.covariance /= n;
  return g;
}

void DepthPano::render_into(DepthPano& out, const Pose& new_pose,
                            ThreadPool* pool, WarpScratch* scratch) const {
  assert(out.rows() == rows() && out.cols() == cols());
  out.clear();
  out.set_pose(new_pose);
  const Pose rel = compose(inverse(new_pose), pose_);

  WarpScratch local;
  WarpScratch& s = scratch != nullptr ? *scratch : local;
  const std::size_t n = static_cast<std::size_t>(rows()) * cols();
  ensure_scratch(s, n, rows());

  auto project_rows = [&](int, int rb, int re) {
    for (int r = rb; r < re; ++r) {
      const float* src = depth_row(r);
      for (int c = 0; c < cols(); ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * cols() + c;
        const float d = src[c];
        if (!(d > 0.0f)) {
          s.target[i] = -1;
          continue;
        }
        const Eigen::Vector3d p_new = rel * model_.unproject(r, c, d);
        const auto proj = model_.project(p_new);
        if (!proj) {
          s.target[i] = -1;
          continue;
        }
        s.target[i] = proj->row * cols() + proj->col;
        s.depth[i] = static_cast<float>(proj->range);
        s.count[i] = count_[i];
      }
    }
  };
  if (pool != nullptr && pool->workers() > 1) {
    pool->parallel_chunks(0, rows(), 8, project_rows);
  } else {
    project_rows(0, 0, rows());
  }

  bucket_by_row(s, n, cols(), rows());

  // Nearer surface wins; on equal depth the better-supported pixel does.
  // The reduction is commutative, so any partition gives the same output.
  auto merge_rows = [&](int, int rb, int re) {
    for (int pr = rb; pr < re; ++pr) {
      for (int k = s.row_offset[pr]; k < s.row_offset[pr + 1]; ++k) {
        const std::int32_t i = s.order[k];
        const std::size_t pi = static_cast<std::size_t>(s.target[i]);
        const float d = s.depth[i];
        const std::uint8_t cnt = s.count[i];
        if (out.depth_[pi] <= 0.0f || d < out.depth_[pi] ||
            (d == out.depth_[pi] && cnt > out.count_[pi])) {
          out.depth_[pi] = d;
          out.count_[pi] = cnt;
        }
      }
    }
  };
  if (pool != nullptr && pool->workers() > 1) {
    pool->parallel_chunks(0, rows(), 16, merge_rows);
  } else {
    merge_rows(0, 0, rows());
  }
}

double DepthPano::fill_ratio() const {
  std::size_t filled = 0;
  for (float d : depth_) {
    if (d > 0.0f) ++filled;
  }
  return static_cast<double>(filled) / depth_.size();
}

namespace {

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::ifstream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return is.good();
}

}  // namespace

void save_snapshot(const DepthPano& pano, const std::string& path,
                   float meters_per_tick) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  os.write("LPAN", 4);
  write_pod<std::uint16_t>(os, 1);
  write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(pano.rows()));
  write_pod<std::uint16_t>(os, static_cast<std::uint16_t>(pano.cols()));
  write_pod<float>(os, meters_per_tick);
  const Pose& p = pano.pose();
  const float pose7[7] = {
      static_cast<float>(p.translation.x()), static_cast<float>(p.translation.y()),
      static_cast<float>(p.translation.z()), static_cast<float>(p.rotation.x()),
      static_cast<float>(p.rotation.y()),    static_cast<float>(p.rotation.z()),
      static_cast<float>(p.rotation.w())};
  os.write(reinterpret_cast<const char*>(pose7), sizeof(pose7));

  const std::size_t n = static_cast<std::size_t>(pano.rows()) * pano.cols();
  std::vector<std::uint16_t> ticks(n);
  std::vector<std::uint8_t> counts(n);
  for (int r = 0; r < pano.rows(); ++r) {
    kernels::meters_to_ticks(pano.depth_row(r),
                             ticks.data() + static_cast<std::size_t>(r) * pano.cols(),
                             pano.cols(), 1.0f / meters_per_tick);
    for (int c = 0; c < pano.cols(); ++c) {
      counts[static_cast<std::size_t>(r) * pano.cols() + c] = pano.count(r, c);
    }
  }
  os.write(reinterpret_cast<const char*>(ticks.data()), n * sizeof(std::uint16_t));
  os.write(reinterpret_cast<const char*>(counts.data()), n);
  if (!os) throw std::runtime_error("short write: " + path);
}

PanoSnapshot load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LPAN", 4) != 0) {
    throw std::runtime_error("not a pano snapshot: " + path);
  }
  PanoSnapshot snap;
  float pose7[7];
  if (!read_pod(is, snap.version) || !read_pod(is, snap.rows) ||
      !read_pod(is, snap.cols) || !read_pod(is, snap.meters_per_tick)) {
    throw std::runtime_error("truncated pano header: " + path);
  }
  is.read(reinterpret_cast<char*>(pose7), sizeof(pose7));
  if (!is) throw std::runtime_error("truncated pano header: " + path);
  snap.pose.translation = Eigen::Vector3d(pose7[0], pose7[1], pose7[2]);
  snap.pose.rotation =
      Eigen::Quaterniond(pose7[6], pose7[3], pose7[4], pose7[5]).normalized();

  const std::size_t n = static_cast<std::size_t>(snap.rows) * snap.cols;
  snap.depth_ticks.resize(n);
  snap.counters.resize(n);
  is.read(reinterpret_cast<char*>(snap.depth_ticks.data()),
          n * sizeof(std::uint16_t));
  is.read(reinterpret_cast<char*>(snap.counters.data()), n);
  if (!is) throw std::runtime_error("truncated pano payload: " + path);
  return snap;
}

DepthPano pano_from_snapshot(const PanoSnapshot& snap, const LidarModel& model,
                             int k_max, float fuse_tol) {
  if (model.rows() != snap.rows || model.cols() != snap.cols) {
    throw std::runtime_error("pano snapshot size does not match model");
  }
  DepthPano pano(model, k_max, fuse_tol);
  pano.set_pose(snap.pose);
  const std::size_t n = snap.depth_ticks.size();
  std::vector<float> meters(n);
  kernels::ticks_to_meters(snap.depth_ticks.data(), meters.data(), n,
                           snap.meters_per_tick);
  for (int r = 0; r < pano.rows(); ++r) {
    for (int c = 0; c < pano.cols(); ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * pano.cols() + c;
      if (meters[i] > 0.0f && snap.counters[i] > 0) {
        pano.set_pixel(r, c, meters[i], snap.counters[i]);
      }
    }
  }
  return pano;
}

}  // namespace lodom
