#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "lodom/kernels.hpp"

using namespace lodom;

TEST_SUITE_BEGIN("kernels");

namespace {

bool have_avx2() { return kernels::supported(kernels::Backend::kAvx2); }

std::vector<float> random_ranges(std::mt19937_64& rng, std::size_t n,
                                 double invalid_frac = 0.2) {
  std::uniform_real_distribution<float> r(0.5f, 120.0f);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<float> out(n);
  for (auto& v : out) v = u(rng) < invalid_frac ? 0.0f : r(rng);
  return out;
}

}  // namespace

TEST_CASE("tick conversion round trip and invalid handling") {
  const auto& ops = kernels::ops(kernels::Backend::kScalar);
  std::vector<float> meters = {0.0f, 0.5f, 1.0f, 100.0f, 127.99f, 500.0f, -3.0f};
  std::vector<std::uint16_t> ticks(meters.size());
  ops.meters_to_ticks(meters.data(), ticks.data(), meters.size(), 512.0f);
  CHECK(ticks[0] == 0);      // invalid stays invalid
  CHECK(ticks[1] == 256);    // 0.5 m = 256 ticks
  CHECK(ticks[2] == 512);
  CHECK(ticks[5] == 65535);  // saturation
  CHECK(ticks[6] == 0);      // negative -> invalid

  std::vector<float> back(meters.size());
  ops.ticks_to_meters(ticks.data(), back.data(), ticks.size(), 1.0f / 512.0f);
  CHECK(back[1] == doctest::Approx(0.5f));
  CHECK(back[3] == doctest::Approx(100.0f).epsilon(1e-3));
}

TEST_CASE("ticks round trip is exact at tick granularity") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> t(0, 65535);
  std::vector<std::uint16_t> ticks(1000);
  for (auto& v : ticks) v = static_cast<std::uint16_t>(t(rng));
  std::vector<float> meters(ticks.size());
  std::vector<std::uint16_t> back(ticks.size());
  const auto& ops = kernels::ops(kernels::Backend::kScalar);
  ops.ticks_to_meters(ticks.data(), meters.data(), ticks.size(), 1.0f / 512.0f);
  ops.meters_to_ticks(meters.data(), back.data(), meters.size(), 512.0f);
  for (std::size_t i = 0; i < ticks.size(); ++i) CHECK(back[i] == ticks[i]);
}

TEST_CASE("avx2 tick conversion is bit-identical to scalar") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> m(-1.0f, 200.0f);
  std::vector<float> meters(1003);
  for (auto& v : meters) v = m(rng);
  meters[0] = 0.0f;
  meters[1] = std::numeric_limits<float>::infinity();

  const auto& s = kernels::ops(kernels::Backend::kScalar);
  const auto& v = kernels::ops(kernels::Backend::kAvx2);
  std::vector<std::uint16_t> ts(meters.size()), tv(meters.size());
  s.meters_to_ticks(meters.data(), ts.data(), meters.size(), 512.0f);
  v.meters_to_ticks(meters.data(), tv.data(), meters.size(), 512.0f);
  CHECK(std::memcmp(ts.data(), tv.data(), ts.size() * 2) == 0);

  std::vector<float> ms(meters.size()), mv(meters.size());
  s.ticks_to_meters(ts.data(), ms.data(), ts.size(), 1.0f / 512.0f);
  v.ticks_to_meters(ts.data(), mv.data(), ts.size(), 1.0f / 512.0f);
  CHECK(std::memcmp(ms.data(), mv.data(), ms.size() * 4) == 0);
}

TEST_CASE("range moments match a naive loop and avx2 agrees with scalar") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 70;
    const auto r = random_ranges(rng, n);
    const float rm = 4.0f;

    // independent naive oracle
    int valid = 0;
    long double dev = 0, sum = 0, sum2 = 0;
    for (float x : r) {
      if (!(x > 0)) continue;
      ++valid;
      dev += static_cast<long double>(x) / rm - 1.0L;
      sum += x;
      sum2 += static_cast<long double>(x) * x;
    }

    const auto s = kernels::ops(kernels::Backend::kScalar)
                       .range_moments(r.data(), n, rm);
    CHECK(s.valid == valid);
    CHECK(std::abs(s.dev - static_cast<double>(dev)) < 1e-9);
    CHECK(std::abs(s.sum - static_cast<double>(sum)) < 1e-9 * (1 + std::abs(double(sum))));
    CHECK(std::abs(s.sum2 - static_cast<double>(sum2)) < 1e-9 * (1 + std::abs(double(sum2))));

    if (have_avx2()) {
      const auto a = kernels::ops(kernels::Backend::kAvx2)
                         .range_moments(r.data(), n, rm);
      CHECK(a.valid == s.valid);
      CHECK(a.dev == doctest::Approx(s.dev).epsilon(1e-12));
      CHECK(a.sum == doctest::Approx(s.sum).epsilon(1e-12));
      CHECK(a.sum2 == doctest::Approx(s.sum2).epsilon(1e-12));
    }
  }
}

TEST_CASE("point and scatter sums agree across backends") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    const auto r = random_ranges(rng, n);
    std::vector<double> cc(n), cs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = ang(rng);
      cc[i] = std::cos(a);
      cs[i] = std::sin(a);
    }
    const double el = ang(rng) / 4;
    const double ce = std::cos(el), se = std::sin(el);

    const auto& s = kernels::ops(kernels::Backend::kScalar);
    const auto& v = kernels::ops(kernels::Backend::kAvx2);
    const auto ps = s.point_sums(r.data(), n, cc.data(), cs.data(), ce, se);
    const auto pv = v.point_sums(r.data(), n, cc.data(), cs.data(), ce, se);
    CHECK(ps.count == pv.count);
    CHECK(ps.x == doctest::Approx(pv.x).epsilon(1e-12));
    CHECK(ps.y == doctest::Approx(pv.y).epsilon(1e-12));
    CHECK(ps.z == doctest::Approx(pv.z).epsilon(1e-12));

    const double mx = ps.count ? ps.x / ps.count : 0;
    const double my = ps.count ? ps.y / ps.count : 0;
    const double mz = ps.count ? ps.z / ps.count : 0;
    const auto ss =
        s.scatter_sums(r.data(), n, cc.data(), cs.data(), ce, se, mx, my, mz);
    const auto sv =
        v.scatter_sums(r.data(), n, cc.data(), cs.data(), ce, se, mx, my, mz);
    for (int k = 0; k < 6; ++k) {
      CHECK(ss.m[k] == doctest::Approx(sv.m[k]).epsilon(1e-11));
    }
  }
}

TEST_CASE("ray kernels: axis-aligned analytic cases") {
  const auto& ops = kernels::ops(kernels::Backend::kScalar);
  const float origin[3] = {0, 0, 0};
  const float lo[3] = {-5, -5, -2}, hi[3] = {5, 5, 2};

  // from inside a box, +x ray exits at the wall: t = 5
  float dx[1] = {1}, dy[1] = {0}, dz[1] = {0};
  float t[1] = {std::numeric_limits<float>::infinity()};
  std::int32_t id[1] = {-1};
  ops.ray_box(origin, dx, dy, dz, 1, lo, hi, 0.5f, 7, t, id);
  CHECK(t[0] == doctest::Approx(5.0f));
  CHECK(id[0] == 7);

  // from outside, entry face wins
  const float origin2[3] = {-10, 0, 0};
  t[0] = std::numeric_limits<float>::infinity();
  id[0] = -1;
  ops.ray_box(origin2, dx, dy, dz, 1, lo, hi, 0.5f, 3, t, id);
  CHECK(t[0] == doctest::Approx(5.0f));

  // parallel ray misses the plane
  const float nrm[3] = {0, 0, 1};
  t[0] = std::numeric_limits<float>::infinity();
  id[0] = -1;
  ops.ray_plane(origin, dx, dy, dz, 1, nrm, -1.5f, 0.5f, 9, t, id);
  CHECK(id[0] == -1);

  // downward ray hits the ground plane at z = -1.5
  float dz2[1] = {-1};
  float dx2[1] = {0}, dy2[1] = {0};
  t[0] = std::numeric_limits<float>::infinity();
  ops.ray_plane(origin, dx2, dy2, dz2, 1, nrm, -1.5f, 0.5f, 9, t, id);
  CHECK(t[0] == doctest::Approx(1.5f));
  CHECK(id[0] == 9);
}

TEST_CASE("ray kernels bit-identical across backends") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<float> u(-1, 1);
  const std::size_t n = 67;
  std::vector<float> dx(n), dy(n), dz(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3f d(u(rng), u(rng), u(rng));
    if (d.norm() < 1e-3f) d = Eigen::Vector3f(1, 0, 0);
    d.normalize();
    dx[i] = d.x();
    dy[i] = d.y();
    dz[i] = d.z();
  }
  dz[5] = 0.0f;  // exercise the parallel-slab path
  dx[6] = 0.0f;
  dy[6] = 0.0f;
  dz[6] = 1.0f;

  const float origin[3] = {0.3f, -0.2f, 0.1f};
  const float lo[3] = {-4, -6, -2}, hi[3] = {3, 5, 2};
  const float nrm[3] = {0, 0, 1};

  std::vector<float> ts(n, std::numeric_limits<float>::infinity());
  std::vector<float> tv = ts;
  std::vector<std::int32_t> is(n, -1), iv(n, -1);

  const auto& s = kernels::ops(kernels::Backend::kScalar);
  const auto& v = kernels::ops(kernels::Backend::kAvx2);
  s.ray_box(origin, dx.data(), dy.data(), dz.data(), n, lo, hi, 0.5f, 0,
            ts.data(), is.data());
  v.ray_box(origin, dx.data(), dy.data(), dz.data(), n, lo, hi, 0.5f, 0,
            tv.data(), iv.data());
  s.ray_plane(origin, dx.data(), dy.data(), dz.data(), n, nrm, -1.5f, 0.5f, 1,
              ts.data(), is.data());
  v.ray_plane(origin, dx.data(), dy.data(), dz.data(), n, nrm, -1.5f, 0.5f, 1,
              tv.data(), iv.data());

  CHECK(std::memcmp(ts.data(), tv.data(), n * sizeof(float)) == 0);
  CHECK(std::memcmp(is.data(), iv.data(), n * sizeof(std::int32_t)) == 0);
}

TEST_CASE("backend forcing") {
  const auto original = kernels::active();
  CHECK(kernels::force(kernels::Backend::kScalar));
  CHECK(kernels::active() == kernels::Backend::kScalar);
  if (have_avx2()) {
    CHECK(kernels::force(kernels::Backend::kAvx2));
    CHECK(kernels::active() == kernels::Backend::kAvx2);
  }
  kernels::force(original);
}

TEST_SUITE_END();
