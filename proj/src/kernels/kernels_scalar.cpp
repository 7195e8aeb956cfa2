#include <cmath>

#include "kernels_internal.hpp"

namespace lodom::kernels::detail {
namespace {

void ticks_to_meters_scalar(const std::uint16_t* ticks, float* out,
                            std::size_t n, float meters_per_tick) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(ticks[i]) * meters_per_tick;
  }
}

void meters_to_ticks_scalar(const float* meters, std::uint16_t* out,
                            std::size_t n, float ticks_per_meter) {
  for (std::size_t i = 0; i < n; ++i) {
    const float m = meters[i];
    if (!(m > 0.0f)) {
      out[i] = 0;
      continue;
    }
    float r = std::nearbyintf(m * ticks_per_meter);
    r = min_f(max_f(r, 0.0f), 65535.0f);
    out[i] = static_cast<std::uint16_t>(r);
  }
}

RangeMoments range_moments_scalar(const float* r, std::size_t n, float rm) {
  RangeMoments m;
  const double rmd = rm;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(r[i] > 0.0f)) continue;
    const double ri = r[i];
    ++m.valid;
    m.dev += ri / rmd - 1.0;
    m.sum += ri;
    m.sum2 += ri * ri;
  }
  return m;
}

PointSums point_sums_scalar(const float* r, std::size_t n,
                            const double* col_cos, const double* col_sin,
                            double cos_el, double sin_el) {
  PointSums s;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(r[i] > 0.0f)) continue;
    const double ri = r[i];
    ++s.count;
    s.x += (cos_el * col_cos[i]) * ri;
    s.y += (cos_el * col_sin[i]) * ri;
    s.z += sin_el * ri;
  }
  return s;
}

ScatterSums scatter_sums_scalar(const float* r, std::size_t n,
                                const double* col_cos, const double* col_sin,
                                double cos_el, double sin_el, double mx,
                                double my, double mz) {
  ScatterSums s;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(r[i] > 0.0f)) continue;
    const double ri = r[i];
    const double dx = (cos_el * col_cos[i]) * ri - mx;
    const double dy = (cos_el * col_sin[i]) * ri - my;
    const double dz = sin_el * ri - mz;
    s.m[0] += dx * dx;
    s.m[1] += dx * dy;
    s.m[2] += dx * dz;
    s.m[3] += dy * dy;
    s.m[4] += dy * dz;
    s.m[5] += dz * dz;
  }
  return s;
}

void ray_box_scalar(const float origin[3], const float* dx, const float* dy,
                    const float* dz, std::size_t n, const float lo[3],
                    const float hi[3], float t_min, std::int32_t id, float* t,
                    std::int32_t* hit_id) {
  const float ox = origin[0], oy = origin[1], oz = origin[2];
  for (std::size_t i = 0; i < n; ++i) {
    const float tx1 = (lo[0] - ox) / dx[i];
    const float tx2 = (hi[0] - ox) / dx[i];
    const float ty1 = (lo[1] - oy) / dy[i];
    const float ty2 = (hi[1] - oy) / dy[i];
    const float tz1 = (lo[2] - oz) / dz[i];
    const float tz2 = (hi[2] - oz) / dz[i];
    const float tnear =
        max_f(max_f(min_f(tx1, tx2), min_f(ty1, ty2)), min_f(tz1, tz2));
    const float tfar =
        min_f(min_f(max_f(tx1, tx2), max_f(ty1, ty2)), max_f(tz1, tz2));
    // Entry face if the origin is outside, exit face if inside.
    const float thit = tnear > t_min ? tnear : tfar;
    if (tfar >= tnear && thit > t_min && thit < t[i]) {
      t[i] = thit;
      hit_id[i] = id;
    }
  }
}

void ray_plane_scalar(const float origin[3], const float* dx, const float* dy,
                      const float* dz, std::size_t n, const float normal[3],
                      float d, float t_min, std::int32_t id, float* t,
                      std::int32_t* hit_id) {
  const float num =
      d - (normal[0] * origin[0] + normal[1] * origin[1] +
           normal[2] * origin[2]);
  for (std::size_t i = 0; i < n; ++i) {
    const float denom = normal[0] * dx[i] + normal[1] * dy[i] +
                        normal[2] * dz[i];
    const float tc = num / denom;
    if (tc > t_min && tc < t[i]) {
      t[i] = tc;
      hit_id[i] = id;
    }
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      ticks_to_meters_scalar, meters_to_ticks_scalar, range_moments_scalar,
      point_sums_scalar,      scatter_sums_scalar,    ray_box_scalar,
      ray_plane_scalar,
  };
  return ops;
}

}  // namespace lodom::kernels::detail
