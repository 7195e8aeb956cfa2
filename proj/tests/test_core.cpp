#include <doctest.h>

#include <random>

#include "lodom/geometry.hpp"
#include "lodom/lidar_model.hpp"

using namespace lodom;

TEST_SUITE_BEGIN("core");

TEST_CASE("project: horizon point at azimuth 0 lands on the boundary row") {
  const LidarModel model(64, 1024, M_PI / 4, 0.1);
  const auto proj = model.project(Eigen::Vector3d(10, 0, 0));
  REQUIRE(proj.has_value());
  CHECK(proj->row == 32);  // rows/2: boundary elevations fall to the lower row
  CHECK(proj->col == 0);
  CHECK(proj->range == doctest::Approx(10.0));
}

TEST_CASE("project: origin and short ranges are out of bounds, not errors") {
  const LidarModel model(64, 1024, M_PI / 4, 0.1);
  CHECK(!model.project(Eigen::Vector3d(0, 0, 0)).has_value());
  CHECK(!model.project(Eigen::Vector3d(0.1, 0.1, 0)).has_value());
  // elevation outside the fov
  CHECK(!model.project(Eigen::Vector3d(1, 0, 5)).has_value());
}

TEST_CASE("project: hand-evaluated bin for a 4x8 model") {
  // rows=4, cols=8, fov=pi/2 centered. Point at elevation +pi/8, azimuth
  // pi/2: col = floor((pi/2)/(pi/4) + 0.5) = 2, row = floor((pi/4 - pi/8) /
  // (pi/8)) = 1.
  const LidarModel model(4, 8, M_PI / 2, 0.1);
  const double elev = M_PI / 8, azim = M_PI / 2, r = 5.0;
  const Eigen::Vector3d p(r * std::cos(elev) * std::cos(azim),
                          r * std::cos(elev) * std::sin(azim),
                          r * std::sin(elev));
  const auto proj = model.project(p);
  REQUIRE(proj.has_value());
  CHECK(proj->row == 1);
  CHECK(proj->col == 2);
}

TEST_CASE("unproject: horizon row, col 0 gives the +x axis direction") {
  // 5 rows put the middle bin center exactly on the horizon.
  const LidarModel model(5, 8, M_PI / 2, 0.1);
  const Eigen::Vector3d p = model.unproject(2, 0, 1.0);
  CHECK(p.x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("unproject/project round trip over all pixels") {
  const LidarModel model(4, 8, M_PI / 2, 0.1);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 8; ++c) {
      const auto proj = model.project(model.unproject(r, c, 5.0));
      REQUIRE(proj.has_value());
      CHECK(proj->row == r);
      CHECK(proj->col == c);
      CHECK(proj->range == doctest::Approx(5.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("unproject/project round trip fuzz") {
  const LidarModel model(64, 1024, M_PI / 4, 0.1, 0.05);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> row_d(0, 63), col_d(0, 1023);
  std::uniform_real_distribution<double> range_d(0.6, 120.0);
  for (int i = 0; i < 10000; ++i) {
    const int r = row_d(rng), c = col_d(rng);
    const double range = range_d(rng);
    const auto proj = model.project(model.unproject(r, c, range));
    REQUIRE(proj.has_value());
    CHECK(proj->row == r);
    CHECK(proj->col == c);
    CHECK(std::abs(proj->range - range) < 1e-6);
  }
}

TEST_CASE("column mapping is periodic under one-bin rotations") {
  const LidarModel model(16, 64, M_PI / 3, 0.1);
  const double step = 2.0 * M_PI / 64;
  const Eigen::Quaterniond rot(Eigen::AngleAxisd(step, Eigen::Vector3d::UnitZ()));
  for (int c = 0; c < 64; ++c) {
    const Eigen::Vector3d p = model.unproject(5, c, 10.0);
    const auto proj = model.project(rot * p);
    REQUIRE(proj.has_value());
    CHECK(proj->col == (c + 1) % 64);
    CHECK(proj->row == 5);
  }
}

TEST_CASE("compose/inverse/transform obey rigid-motion semantics") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    Pose p;
    p.rotation = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
    p.translation = Eigen::Vector3d(u(rng), u(rng), u(rng)) * 5.0;

    // compose(identity, p) == p
    const Pose ip = compose(Pose::Identity(), p);
    CHECK(rotation_angle(ip, p) < 1e-12);
    CHECK((ip.translation - p.translation).norm() < 1e-12);

    // quaternion stays unit after composition
    const Pose pp = compose(p, p);
    CHECK(std::abs(pp.rotation.norm() - 1.0) < 1e-9);

    // compose(p, inverse(p)) == identity
    const Pose id = compose(p, inverse(p));
    CHECK(rotation_angle(id, Pose::Identity()) < 1e-9);
    CHECK(id.translation.norm() < 1e-9);

    // transform(inverse(p), transform(p, x)) == x
    const Eigen::Vector3d x(u(rng), u(rng), u(rng));
    const Eigen::Vector3d back = inverse(p) * (p * x);
    CHECK((back - x).norm() < 1e-9);
  }
}

TEST_CASE("90 degree yaw maps +x to +y (right-handed, z-up)") {
  Pose yaw;
  yaw.rotation =
      Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()));
  const Eigen::Vector3d out = yaw * Eigen::Vector3d(1, 0, 0);
  CHECK(out.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.y() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exp/log so3 round trip") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d w(u(rng), u(rng), u(rng));
    const Eigen::Vector3d back = log_so3(exp_so3(w));
    CHECK((back - w).norm() < 1e-9);
  }
}

TEST_CASE("gaussian merge is order independent") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);

  // Build Gaussians of three point sets and merge in both orders; compare
  // against the Gaussian of the union computed directly.
  auto gaussian_of = [](const std::vector<Eigen::Vector3d>& pts) {
    Gaussian3 g;
    g.weight = static_cast<int>(pts.size());
    for (const auto& p : pts) g.mean += p;
    g.mean /= static_cast<double>(pts.size());
    for (const auto& p : pts) {
      const Eigen::Vector3d d = p - g.mean;
      g.covariance += d * d.transpose();
    }
    g.covariance /= static_cast<double>(pts.size());
    return g;
  };

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::Vector3d> a, b, c, all;
    for (int i = 0; i < 7; ++i) a.emplace_back(u(rng), u(rng), u(rng));
    for (int i = 0; i < 13; ++i) b.emplace_back(u(rng), u(rng), u(rng));
    for (int i = 0; i < 4; ++i) c.emplace_back(u(rng), u(rng), u(rng));
    all.insert(all.end(), a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    all.insert(all.end(), c.begin(), c.end());

    const Gaussian3 ga = gaussian_of(a), gb = gaussian_of(b), gc = gaussian_of(c);
    const Gaussian3 m1 = merge(merge(ga, gb), gc);
    const Gaussian3 m2 = merge(gc, merge(gb, ga));
    const Gaussian3 direct = gaussian_of(all);

    CHECK((m1.mean - m2.mean).norm() < 1e-9);
    CHECK((m1.covariance - m2.covariance).norm() < 1e-9);
    CHECK((m1.mean - direct.mean).norm() < 1e-9);
    CHECK((m1.covariance - direct.covariance).norm() < 1e-9);
    CHECK(m1.weight == 24);
  }
}

TEST_CASE("firing interval times cols equals the sweep period") {
  const LidarModel model(64, 1024, M_PI / 4, 0.1);
  CHECK(std::abs(model.firing_interval() * 1024 - 0.1) < 1e-12);
}

TEST_SUITE_END();
