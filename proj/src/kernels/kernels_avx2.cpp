#if defined(LODOM_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace lodom::kernels::detail {
namespace {

inline double reduce4(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

void ticks_to_meters_avx2(const std::uint16_t* ticks, float* out,
                          std::size_t n, float meters_per_tick) {
  const __m256 scale = _mm256_set1_ps(meters_per_tick);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i raw =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(ticks + i));
    const __m256i wide = _mm256_cvtepu16_epi32(raw);
    const __m256 m = _mm256_mul_ps(_mm256_cvtepi32_ps(wide), scale);
    _mm256_storeu_ps(out + i, m);
  }
  for (; i < n; ++i) {
    out[i] = static_cast<float>(ticks[i]) * meters_per_tick;
  }
}

void meters_to_ticks_avx2(const float* meters, std::uint16_t* out,
                          std::size_t n, float ticks_per_meter) {
  const __m256 scale = _mm256_set1_ps(ticks_per_meter);
  const __m256 zero = _mm256_setzero_ps();
  const __m256 top = _mm256_set1_ps(65535.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 m = _mm256_loadu_ps(meters + i);
    const __m256 pos = _mm256_cmp_ps(m, zero, _CMP_GT_OQ);
    __m256 r = _mm256_round_ps(_mm256_mul_ps(m, scale),
                               _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    r = _mm256_min_ps(_mm256_max_ps(r, zero), top);
    r = _mm256_and_ps(r, pos);
    const __m256i v = _mm256_cvtps_epi32(r);
    const __m128i packed = _mm_packus_epi32(_mm256_castsi256_si128(v),
                                            _mm256_extracti128_si256(v, 1));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), packed);
  }
  for (; i < n; ++i) {
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

RangeMoments range_moments_avx2(const float* r, std::size_t n, float rm) {
  const __m256d rmd = _mm256_set1_pd(static_cast<double>(rm));
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d dev = zero, sum = zero, sum2 = zero;
  int valid = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rd = _mm256_cvtps_pd(_mm_loadu_ps(r + i));
    const __m256d mask = _mm256_cmp_pd(rd, zero, _CMP_GT_OQ);
    valid += __builtin_popcount(_mm256_movemask_pd(mask));
    dev = _mm256_add_pd(
        dev, _mm256_and_pd(mask, _mm256_sub_pd(_mm256_div_pd(rd, rmd), one)));
    sum = _mm256_add_pd(sum, _mm256_and_pd(mask, rd));
    sum2 = _mm256_add_pd(sum2, _mm256_and_pd(mask, _mm256_mul_pd(rd, rd)));
  }
  RangeMoments m;
  m.valid = valid;
  m.dev = reduce4(dev);
  m.sum = reduce4(sum);
  m.sum2 = reduce4(sum2);
  const double rmd1 = rm;
  for (; i < n; ++i) {
    if (!(r[i] > 0.0f)) continue;
    const double ri = r[i];
    ++m.valid;
    m.dev += ri / rmd1 - 1.0;
    m.sum += ri;
    m.sum2 += ri * ri;
  }
  return m;
}

PointSums point_sums_avx2(const float* r, std::size_t n, const double* col_cos,
                          const double* col_sin, double cos_el,
                          double sin_el) {
  const __m256d ce = _mm256_set1_pd(cos_el);
  const __m256d se = _mm256_set1_pd(sin_el);
  const __m256d zero = _mm256_setzero_pd();
  __m256d sx = zero, sy = zero, sz = zero;
  int count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rd = _mm256_cvtps_pd(_mm_loadu_ps(r + i));
    const __m256d mask = _mm256_cmp_pd(rd, zero, _CMP_GT_OQ);
    count += __builtin_popcount(_mm256_movemask_pd(mask));
    const __m256d ca = _mm256_loadu_pd(col_cos + i);
    const __m256d sa = _mm256_loadu_pd(col_sin + i);
    sx = _mm256_add_pd(
        sx, _mm256_and_pd(mask, _mm256_mul_pd(_mm256_mul_pd(ce, ca), rd)));
    sy = _mm256_add_pd(
        sy, _mm256_and_pd(mask, _mm256_mul_pd(_mm256_mul_pd(ce, sa), rd)));
    sz = _mm256_add_pd(sz, _mm256_and_pd(mask, _mm256_mul_pd(se, rd)));
  }
  PointSums s;
  s.count = count;
  s.x = reduce4(sx);
  s.y = reduce4(sy);
  s.z = reduce4(sz);
  for (; i < n; ++i) {
    if (!(r[i] > 0.0f)) continue;
    const double ri = r[i];
    ++s.count;
    s.x += (cos_el * col_cos[i]) * ri;
    s.y += (cos_el * col_sin[i]) * ri;
    s.z += sin_el * ri;
  }
  return s;
}

ScatterSums scatter_sums_avx2(const float* r, std::size_t n,
                              const double* col_cos, const double* col_sin,
                              double cos_el, double sin_el, double mx,
                              double my, double mz) {
  const __m256d ce = _mm256_set1_pd(cos_el);
  const __m256d se = _mm256_set1_pd(sin_el);
  const __m256d vmx = _mm256_set1_pd(mx);
  const __m256d vmy = _mm256_set1_pd(my);
  const __m256d vmz = _mm256_set1_pd(mz);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc[6] = {zero, zero, zero, zero, zero, zero};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rd = _mm256_cvtps_pd(_mm_loadu_ps(r + i));
    const __m256d mask = _mm256_cmp_pd(rd, zero, _CMP_GT_OQ);
    const __m256d ca = _mm256_loadu_pd(col_cos + i);
    const __m256d sa = _mm256_loadu_pd(col_sin + i);
    const __m256d dx = _mm256_sub_pd(
        _mm256_mul_pd(_mm256_mul_pd(ce, ca), rd), vmx);
    const __m256d dy = _mm256_sub_pd(
        _mm256_mul_pd(_mm256_mul_pd(ce, sa), rd), vmy);
    const __m256d dz = _mm256_sub_pd(_mm256_mul_pd(se, rd), vmz);
    acc[0] = _mm256_add_pd(acc[0], _mm256_and_pd(mask, _mm256_mul_pd(dx, dx)));
    acc[1] = _mm256_add_pd(acc[1], _mm256_and_pd(mask, _mm256_mul_pd(dx, dy)));
    acc[2] = _mm256_add_pd(acc[2], _mm256_and_pd(mask, _mm256_mul_pd(dx, dz)));
    acc[3] = _mm256_add_pd(acc[3], _mm256_and_pd(mask, _mm256_mul_pd(dy, dy)));
    acc[4] = _mm256_add_pd(acc[4], _mm256_and_pd(mask, _mm256_mul_pd(dy, dz)));
    acc[5] = _mm256_add_pd(acc[5], _mm256_and_pd(mask, _mm256_mul_pd(dz, dz)));
  }
  ScatterSums s;
  for (int k = 0; k < 6; ++k) s.m[k] = reduce4(acc[k]);
  for (; i < n; ++i) {
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

void ray_box_avx2(const float origin[3], const float* dx, const float* dy,
                  const float* dz, std::size_t n, const float lo[3],
                  const float hi[3], float t_min, std::int32_t id, float* t,
                  std::int32_t* hit_id) {
  const __m256 lx = _mm256_set1_ps(lo[0] - origin[0]);
  const __m256 ly = _mm256_set1_ps(lo[1] - origin[1]);
  const __m256 lz = _mm256_set1_ps(lo[2] - origin[2]);
  const __m256 hx = _mm256_set1_ps(hi[0] - origin[0]);
  const __m256 hy = _mm256_set1_ps(hi[1] - origin[1]);
  const __m256 hz = _mm256_set1_ps(hi[2] - origin[2]);
  const __m256 tmin = _mm256_set1_ps(t_min);
  const __m256i vid = _mm256_set1_epi32(id);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vdx = _mm256_loadu_ps(dx + i);
    const __m256 vdy = _mm256_loadu_ps(dy + i);
    const __m256 vdz = _mm256_loadu_ps(dz + i);
    const __m256 tx1 = _mm256_div_ps(lx, vdx);
    const __m256 tx2 = _mm256_div_ps(hx, vdx);
    const __m256 ty1 = _mm256_div_ps(ly, vdy);
    const __m256 ty2 = _mm256_div_ps(hy, vdy);
    const __m256 tz1 = _mm256_div_ps(lz, vdz);
    const __m256 tz2 = _mm256_div_ps(hz, vdz);
    const __m256 tnear = _mm256_max_ps(
        _mm256_max_ps(_mm256_min_ps(tx1, tx2), _mm256_min_ps(ty1, ty2)),
        _mm256_min_ps(tz1, tz2));
    const __m256 tfar = _mm256_min_ps(
        _mm256_min_ps(_mm256_max_ps(tx1, tx2), _mm256_max_ps(ty1, ty2)),
        _mm256_max_ps(tz1, tz2));
    const __m256 use_near = _mm256_cmp_ps(tnear, tmin, _CMP_GT_OQ);
    const __m256 thit = _mm256_blendv_ps(tfar, tnear, use_near);
    const __m256 told = _mm256_loadu_ps(t + i);
    __m256 ok = _mm256_cmp_ps(tfar, tnear, _CMP_GE_OQ);
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(thit, tmin, _CMP_GT_OQ));
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(thit, told, _CMP_LT_OQ));
    _mm256_storeu_ps(t + i, _mm256_blendv_ps(told, thit, ok));
    const __m256i oldid =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(hit_id + i));
    const __m256i newid = _mm256_castps_si256(_mm256_blendv_ps(
        _mm256_castsi256_ps(oldid), _mm256_castsi256_ps(vid), ok));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(hit_id + i), newid);
  }
  if (i < n) {
    scalar_ops().ray_box(origin, dx + i, dy + i, dz + i, n - i, lo, hi, t_min,
                         id, t + i, hit_id + i);
  }
}

void ray_plane_avx2(const float origin[3], const float* dx, const float* dy,
                    const float* dz, std::size_t n, const float normal[3],
                    float d, float t_min, std::int32_t id, float* t,
                    std::int32_t* hit_id) {
  const float num_s =
      d - (normal[0] * origin[0] + normal[1] * origin[1] +
           normal[2] * origin[2]);
  const __m256 num = _mm256_set1_ps(num_s);
  const __m256 n0 = _mm256_set1_ps(normal[0]);
  const __m256 n1 = _mm256_set1_ps(normal[1]);
  const __m256 n2 = _mm256_set1_ps(normal[2]);
  const __m256 tmin = _mm256_set1_ps(t_min);
  const __m256i vid = _mm256_set1_epi32(id);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 denom = _mm256_add_ps(
        _mm256_add_ps(_mm256_mul_ps(n0, _mm256_loadu_ps(dx + i)),
                      _mm256_mul_ps(n1, _mm256_loadu_ps(dy + i))),
        _mm256_mul_ps(n2, _mm256_loadu_ps(dz + i)));
    const __m256 tc = _mm256_div_ps(num, denom);
    const __m256 told = _mm256_loadu_ps(t + i);
    __m256 ok = _mm256_cmp_ps(tc, tmin, _CMP_GT_OQ);
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(tc, told, _CMP_LT_OQ));
    _mm256_storeu_ps(t + i, _mm256_blendv_ps(told, tc, ok));
    const __m256i oldid =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(hit_id + i));
    const __m256i newid = _mm256_castps_si256(_mm256_blendv_ps(
        _mm256_castsi256_ps(oldid), _mm256_castsi256_ps(vid), ok));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(hit_id + i), newid);
  }
  if (i < n) {
    scalar_ops().ray_plane(origin, dx + i, dy + i, dz + i, n - i, normal, d,
                           t_min, id, t + i, hit_id + i);
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {
      ticks_to_meters_avx2, meters_to_ticks_avx2, range_moments_avx2,
      point_sums_avx2,      scatter_sums_avx2,    ray_box_avx2,
      ray_plane_avx2,
  };
  return ops;
}

}  // namespace lodom::kernels::detail

#endif  // LODOM_HAVE_AVX2
