#include <doctest.h>

#include <clothfit/chamfer.hpp>

#include <Eigen/Geometry>
#include <cmath>
#include <limits>
#include <utility>

using namespace clothfit;

namespace {

Mat3X cloud_of(std::initializer_list<Vec3> points) {
  Mat3X m(3, points.size());
  int i = 0;
  for (const Vec3& p : points) m.col(i++) = p;
  return m;
}

Mat3X random_cloud(int n, std::uint64_t seed, Real scale = 1.0) {
  Rng rng(seed);
  Mat3X m(3, n);
  for (int i = 0; i < n; ++i)
    m.col(i) = scale * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return m;
}

// O(N^2) oracle with the lowest-index tie rule, independent of the library's
// scan and grid implementations.
std::pair<int, Real> brute_nearest(const Vec3& query, const Mat3X& targets) {
  int best = -1;
  Real best_d = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < targets.cols(); ++i) {
    const Real d = (targets.col(i) - query).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return {best, best_d};
}

}  // namespace

TEST_CASE("nearest_neighbor_sq: membership, hand case, tie-break, empty") {
  const Mat3X targets = cloud_of({Vec3(1, 0, 0), Vec3(3, 0, 0)});
  const auto [idx, d] = nearest_neighbor_sq(Vec3(0, 0, 0), targets);
  CHECK(idx == 0);
  CHECK(d == doctest::Approx(1.0).epsilon(1e-15));

  const auto [own, zero] = nearest_neighbor_sq(Vec3(3, 0, 0), targets);
  CHECK(own == 1);
  CHECK(zero == 0.0);

  const Mat3X ties = cloud_of({Vec3(9, 0, 0), Vec3(0, 9, 0), Vec3(1, 0, 0), Vec3(0, 0, 9),
                               Vec3(9, 9, 0), Vec3(-1, 0, 0)});
  CHECK(nearest_neighbor_sq(Vec3::Zero(), ties).first == 2);

  CHECK_THROWS_AS(nearest_neighbor_sq(Vec3::Zero(), Mat3X(3, 0)), ValidationError);
}

TEST_CASE("unidirectional_chamfer: hand values and subset identity") {
  const Mat3X real = cloud_of({Vec3(1, 0, 0), Vec3(3, 0, 0)});
  CHECK(unidirectional_chamfer(cloud_of({Vec3(0, 0, 0)}), real).value ==
        doctest::Approx(1.0).epsilon(1e-15));

  const LossReport two = unidirectional_chamfer(cloud_of({Vec3(0, 0, 0), Vec3(2, 0, 0)}),
                                                cloud_of({Vec3(0, 0, 0)}));
  CHECK(two.value == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(two.argmins == std::vector<int>{0, 0});

  const Mat3X big = random_cloud(64, 10);
  CHECK(unidirectional_chamfer(big, big).value == 0.0);
  CHECK(unidirectional_chamfer(big.leftCols(10), big).value == 0.0);

  CHECK_THROWS_AS(unidirectional_chamfer(Mat3X(3, 0), real), ValidationError);
  CHECK_THROWS_AS(unidirectional_chamfer(real, Mat3X(3, 0)), ValidationError);
}

TEST_CASE("bidirectional_chamfer: identity, singletons, symmetry") {
  const Mat3X a = random_cloud(40, 3);
  CHECK(bidirectional_chamfer(a, a) == 0.0);

  const Real d = 1.7;
  CHECK(bidirectional_chamfer(cloud_of({Vec3(0, 0, 0)}), cloud_of({Vec3(d, 0, 0)})) ==
        doctest::Approx(2 * d * d).epsilon(1e-15));

  const Mat3X b = random_cloud(25, 4);
  CHECK(bidirectional_chamfer(a, b) == doctest::Approx(bidirectional_chamfer(b, a)).epsilon(1e-15));
  CHECK(bidirectional_chamfer(a, b) > 0.0);
}

TEST_CASE("adding far points never changes the directed loss, always grows the symmetric one") {
  const Mat3X sim = random_cloud(30, 21);
  const Mat3X real = random_cloud(50, 22);
  const LossReport base = unidirectional_chamfer(sim, real);

  Mat3X grown(3, real.cols() + 3);
  grown.leftCols(real.cols()) = real;
  grown.col(real.cols() + 0) = Vec3(50, 0, 0);
  grown.col(real.cols() + 1) = Vec3(0, 50, 0);
  grown.col(real.cols() + 2) = Vec3(0, 0, -50);

  const LossReport far = unidirectional_chamfer(sim, grown);
  CHECK(far.value == base.value);
  CHECK(far.argmins == base.argmins);
  CHECK(bidirectional_chamfer(sim, grown) > bidirectional_chamfer(sim, real));

  // Any extra target can only bring a sim point's match closer.
  Mat3X near(3, real.cols() + 1);
  near.leftCols(real.cols()) = real;
  near.col(real.cols()) = sim.col(0);
  CHECK(unidirectional_chamfer(sim, near).value <= base.value);
}

TEST_CASE("chamfer_point_gradients: hand cases and staleness guard") {
  const Mat3X sim = cloud_of({Vec3(1, 0, 0)});
  const Mat3X real = cloud_of({Vec3(0, 0, 0)});
  const LossReport report = unidirectional_chamfer(sim, real);
  const Mat3X g = chamfer_point_gradients(report, sim, real);
  CHECK((g.col(0) - Vec3(2, 0, 0)).norm() < 1e-15);

  const LossReport self = unidirectional_chamfer(real, real);
  CHECK(chamfer_point_gradients(self, real, real).norm() == 0.0);

  const Mat3X wrong_size = cloud_of({Vec3(1, 0, 0), Vec3(2, 0, 0)});
  CHECK_THROWS_AS(chamfer_point_gradients(report, wrong_size, real), ValidationError);
  LossReport bad = report;
  bad.argmins[0] = 5;
  CHECK_THROWS_AS(chamfer_point_gradients(bad, sim, real), ValidationError);
}

TEST_CASE("chamfer_point_gradients match central finite differences") {
  const Mat3X real = random_cloud(24, 31);
  Mat3X sim = random_cloud(9, 32);
  const LossReport report = unidirectional_chamfer(sim, real);
  const Mat3X analytic = chamfer_point_gradients(report, sim, real);
  const Real h = 1e-6;
  for (int i = 0; i < sim.cols(); ++i)
    for (int axis = 0; axis < 3; ++axis) {
      Mat3X plus = sim, minus = sim;
      plus(axis, i) += h;
      minus(axis, i) -= h;
      const Real fd =
          (unidirectional_chamfer(plus, real).value - unidirectional_chamfer(minus, real).value) /
          (2 * h);
      const Real an = analytic(axis, i);
      CHECK(std::abs(fd - an) < 1e-6 * std::max({std::abs(fd), std::abs(an), Real(1e-3)}));
    }
}

TEST_CASE("hash grid agrees exactly with the brute-force oracle") {
  for (const int n : {1, 2, 17, 100, 512}) {
    const Mat3X targets = random_cloud(n, 900 + n);
    const SpatialHashGrid grid(targets);
    const Mat3X queries = random_cloud(200, 1900 + n, 1.3);
    for (int q = 0; q < queries.cols(); ++q) {
      const auto expect = brute_nearest(queries.col(q), targets);
      const auto fast = grid.nearest(queries.col(q));
      const auto scan = nearest_neighbor_sq(queries.col(q), targets);
      CHECK(fast.first == expect.first);
      CHECK(scan.first == expect.first);
      CHECK(fast.second == doctest::Approx(expect.second).epsilon(1e-12));
    }
    // Membership queries must hit index and exact zero.
    for (int q = 0; q < std::min(20, n); ++q) {
      const auto hit = grid.nearest(targets.col(q));
      CHECK(hit.second == 0.0);
      CHECK(targets.col(hit.first) == targets.col(q));
    }
  }

  // Duplicates and tight clusters exercise the tie rule and cell packing.
  Mat3X clustered(3, 40);
  Rng rng(55);
  for (int i = 0; i < 20; ++i) clustered.col(i) = Vec3(0.5, 0.5, 0.5);
  for (int i = 20; i < 40; ++i)
    clustered.col(i) =
        Vec3(rng.uniform(0, 1e-4), rng.uniform(0, 1e-4), 40.0 + rng.uniform(0, 1e-4));
  const SpatialHashGrid grid(clustered);
  for (int q = 0; q < 50; ++q) {
    const Vec3 query(rng.uniform(-1, 2), rng.uniform(-1, 2), rng.uniform(-5, 45));
    const auto expect = brute_nearest(query, clustered);
    const auto fast = grid.nearest(query);
    CHECK(fast.first == expect.first);
  }
}

TEST_CASE("loss values are invariant under a shared rigid motion") {
  const Mat3X a = random_cloud(120, 61);
  const Mat3X b = random_cloud(90, 62);
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(1.1, Vec3(0.3, -1.0, 0.5).normalized()).toRotationMatrix();
  const Vec3 shift(4.0, -2.0, 1.5);
  Mat3X ra = rot * a;
  ra.colwise() += shift;
  Mat3X rb = rot * b;
  rb.colwise() += shift;

  const Real uni = unidirectional_chamfer(a, b).value;
  const Real uni_moved = unidirectional_chamfer(ra, rb).value;
  CHECK(std::abs(uni - uni_moved) < 1e-10 * uni);

  const Real bi = bidirectional_chamfer(a, b);
  const Real bi_moved = bidirectional_chamfer(ra, rb);
  CHECK(std::abs(bi - bi_moved) < 1e-10 * bi);
}
