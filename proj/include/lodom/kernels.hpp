#pragma once

#include <cstddef>
#include <cstdint>

namespace lodom::kernels {

enum class Backend { kScalar = 0, kAvx2 = 1 };

const char* name(Backend b);
bool supported(Backend b);

/// Backend currently used by the free functions below. Defaults to the best
/// supported one, detected once at startup.
Backend active();

/// Force a backend (used by tests and the CLI `kernels` config key).
/// Returns false and leaves the dispatch unchanged if unsupported.
bool force(Backend b);

struct RangeMoments {
  int valid = 0;     // pixels with r > 0
  double dev = 0.0;  // sum of (r / rm - 1)
  double sum = 0.0;  // sum of r
  double sum2 = 0.0; // sum of r^2
};

struct PointSums {
  int count = 0;
  double x = 0.0, y = 0.0, z = 0.0;
};

struct ScatterSums {
  // xx, xy, xz, yy, yz, zz about the provided mean
  double m[6] = {0, 0, 0, 0, 0, 0};
};

/// Function table of one backend. Per-lane kernels (tick conversion, ray
/// tests) are bit-identical across backends; reduction kernels agree to
/// ~1e-12 relative (double accumulators, different summation order).
struct Ops {
  // u16 range ticks <-> float meters; tick 0 and nonpositive meters are the
  // invalid value. meters_to_ticks rounds to nearest-even and saturates.
  void (*ticks_to_meters)(const std::uint16_t* ticks, float* out,
                          std::size_t n, float meters_per_tick);
  void (*meters_to_ticks)(const float* meters, std::uint16_t* out,
                          std::size_t n, float ticks_per_meter);

  // Masked range statistics over one contiguous pixel run; r <= 0 invalid.
  RangeMoments (*range_moments)(const float* r, std::size_t n, float rm);

  // First/second pass of the 3-D cell statistics over one image-row segment.
  // Point i = r[i] * (cos_el * col_cos[i], cos_el * col_sin[i], sin_el),
  // skipping invalid ranges.
  PointSums (*point_sums)(const float* r, std::size_t n, const double* col_cos,
                          const double* col_sin, double cos_el, double sin_el);
  ScatterSums (*scatter_sums)(const float* r, std::size_t n,
                              const double* col_cos, const double* col_sin,
                              double cos_el, double sin_el, double mx,
                              double my, double mz);

  // Nearest-hit update of a ray bundle (shared origin, SoA directions)
  // against an axis-aligned box / an infinite plane n.x = d. A hit closer
  // than t[i] but farther than t_min replaces (t[i], hit_id[i]).
  void (*ray_box)(const float origin[3], const float* dx, const float* dy,
                  const float* dz, std::size_t n, const float lo[3],
                  const float hi[3], float t_min, std::int32_t id, float* t,
                  std::int32_t* hit_id);
  void (*ray_plane)(const float origin[3], const float* dx, const float* dy,
                    const float* dz, std::size_t n, const float normal[3],
                    float d, float t_min, std::int32_t id, float* t,
                    std::int32_t* hit_id);
};

/// Table of a specific backend (for equivalence tests). Throws if unsupported.
const Ops& ops(Backend b);

/// Table of the active backend.
const Ops& ops();

// Convenience wrappers through the active backend.
inline void ticks_to_meters(const std::uint16_t* ticks, float* out,
                            std::size_t n, float meters_per_tick) {
  ops().ticks_to_meters(ticks, out, n, meters_per_tick);
}
inline void meters_to_ticks(const float* meters, std::uint16_t* out,
                            std::size_t n, float ticks_per_meter) {
  ops().meters_to_ticks(meters, out, n, ticks_per_meter);
}
inline RangeMoments range_moments(const float* r, std::size_t n, float rm) {
  return ops().range_moments(r, n, rm);
}
inline PointSums point_sums(const float* r, std::size_t n,
                            const double* col_cos, const double* col_sin,
                            double cos_el, double sin_el) {
  return ops().point_sums(r, n, col_cos, col_sin, cos_el, sin_el);
}
inline ScatterSums scatter_sums(const float* r, std::size_t n,
                                const double* col_cos, const double* col_sin,
                                double cos_el, double sin_el, double mx,
                                double my, double mz) {
  return ops().scatter_sums(r, n, col_cos, col_sin, cos_el, sin_el, mx, my,
                            mz);
}
inline void ray_box(const float origin[3], const float* dx, const float* dy,
                    const float* dz, std::size_t n, const float lo[3],
                    const float hi[3], float t_min, std::int32_t id, float* t,
                    std::int32_t* hit_id) {
  ops().ray_box(origin, dx, dy, dz, n, lo, hi, t_min, id, t, hit_id);
}
inline void ray_plane(const float origin[3], const float* dx, const float* dy,
                      const float* dz, std::size_t n, const float normal[3],
                      float d, float t_min, std::int32_t id, float* t,
                      std::int32_t* hit_id) {
  ops().ray_plane(origin, dx, dy, dz, n, normal, d, t_min, id, t, hit_id);
}

}  // namespace lodom::kernels
