#include <doctest.h>

#include <clothfit/mesh.hpp>
#include <clothfit/sampler.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace clothfit;

namespace {

TriMesh lopsided_pair() {
  // Face 0 has area 3, face 1 has area 1.
  TriMesh mesh;
  mesh.vertices.resize(3, 6);
  mesh.vertices.col(0) = Vec3(0, 0, 0);
  mesh.vertices.col(1) = Vec3(3, 0, 0);
  mesh.vertices.col(2) = Vec3(0, 2, 0);
  mesh.vertices.col(3) = Vec3(10, 0, 0);
  mesh.vertices.col(4) = Vec3(11, 0, 0);
  mesh.vertices.col(5) = Vec3(10, 2, 0);
  mesh.faces.resize(3, 2);
  mesh.faces.col(0) << 0, 1, 2;
  mesh.faces.col(1) << 3, 4, 5;
  return mesh;
}

// Regularized upper incomplete gamma Q(a, x): series for x < a+1, continued
// fraction otherwise. Supplies the chi-square survival function
// p = Q(dof/2, stat/2) independently of the library under test.
double gamma_q(double a, double x) {
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term, ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-14) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

TEST_CASE("barycentric evaluation: vertex and centroid coefficients") {
  const TriMesh mesh = lopsided_pair();
  const std::vector<SampleCoords> coords = {{0, 1.0, 0.0, 0.0},
                                            {1, 1.0 / 3, 1.0 / 3, 1.0 / 3}};
  const SampledCloud cloud = sample_with_provenance(mesh, mesh.vertices, coords);
  CHECK((cloud.points.col(0) - mesh.vertices.col(0)).norm() < 1e-15);
  const Vec3 centroid =
      (mesh.vertices.col(3) + mesh.vertices.col(4) + mesh.vertices.col(5)) / 3.0;
  CHECK((cloud.points.col(1) - centroid).norm() < 1e-14);
}

TEST_CASE("face draws follow area proportions: 3:1 binomial check") {
  const TriMesh mesh = lopsided_pair();
  const int n = 40000;
  const SampledCloud cloud = sample_surface(mesh, mesh.vertices, n, {}, 99);
  REQUIRE(cloud.has_provenance());
  int big = 0;
  for (const SampleCoords& c : cloud.provenance) big += (c.face == 0);
  const double mean = n * 0.75;
  const double sigma = std::sqrt(n * 0.75 * 0.25);
  CHECK(std::abs(big - mean) < 3 * sigma);
}

TEST_CASE("sampling is seed-deterministic and empty mask means all faces") {
  const TriMesh mesh = build_grid_cloth(5, 5, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  const SampledCloud a = sample_surface(mesh, mesh.vertices, 300, {}, 7);
  const SampledCloud b = sample_surface(mesh, mesh.vertices, 300, {}, 7);
  CHECK(a.points == b.points);
  std::vector<int> all(mesh.face_count());
  std::iota(all.begin(), all.end(), 0);
  const SampledCloud c = sample_surface(mesh, mesh.vertices, 300, all, 7);
  CHECK(a.points == c.points);
  const SampledCloud d = sample_surface(mesh, mesh.vertices, 300, {}, 8);
  CHECK(a.points != d.points);
}

TEST_CASE("sampling a fully degenerate masked region is an error") {
  TriMesh mesh = build_grid_cloth(3, 3, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  Mat3X collapsed = mesh.vertices;
  collapsed.col(mesh.faces(1, 0)) = collapsed.col(mesh.faces(0, 0));
  collapsed.col(mesh.faces(2, 0)) = collapsed.col(mesh.faces(0, 0));
  CHECK_THROWS_AS(sample_surface(mesh, collapsed, 10, {0}, 1), ValidationError);
  CHECK_THROWS_AS(sample_surface(mesh, mesh.vertices, 0, {}, 1), ValidationError);
}

TEST_CASE("provenance reconstructs every sampled point") {
  const TriMesh mesh = build_grid_cloth(7, 7, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  Mat3X bent = mesh.vertices;
  bent.row(2) = 0.3 * bent.row(0).array().sin();
  const SampledCloud cloud = sample_surface(mesh, bent, 1000, {}, 4242);
  REQUIRE(cloud.has_provenance());
  for (int i = 0; i < cloud.size(); ++i) {
    const SampleCoords& c = cloud.provenance[i];
    CHECK(c.u + c.v + c.w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.u >= 0.0);
    CHECK(c.v >= 0.0);
    CHECK(c.w >= 0.0);
    const Vec3 rebuilt = c.u * bent.col(mesh.faces(0, c.face)) +
                         c.v * bent.col(mesh.faces(1, c.face)) +
                         c.w * bent.col(mesh.faces(2, c.face));
    CHECK((rebuilt - cloud.points.col(i)).norm() < 1e-12);
  }
}

TEST_CASE("per-face counts pass a chi-square uniformity check") {
  const TriMesh mesh = build_grid_cloth(7, 7, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  const int n = 50000;
  const SampledCloud cloud = sample_surface(mesh, mesh.vertices, n, {}, 1234);
  std::vector<int> counts(mesh.face_count(), 0);
  for (const SampleCoords& c : cloud.provenance) counts[c.face]++;
  const double expected = double(n) / mesh.face_count();  // all rest faces equal-area
  double stat = 0;
  for (int c : counts) stat += (c - expected) * (c - expected) / expected;
  const double p = gamma_q(0.5 * (mesh.face_count() - 1), 0.5 * stat);
  CAPTURE(stat);
  CHECK(p > 0.001);
}

TEST_CASE("point_vertex_jacobian returns the barycentric weights") {
  const SampleCoords vertex{0, 1.0, 0.0, 0.0};
  CHECK(point_vertex_jacobian(vertex) == Vec3(1.0, 0.0, 0.0));
  const SampleCoords mixed{3, 0.2, 0.3, 0.5};
  CHECK(point_vertex_jacobian(mixed) == Vec3(0.2, 0.3, 0.5));
}

TEST_CASE("perturbing a face vertex moves the point by its weight") {
  const TriMesh mesh = lopsided_pair();
  const std::vector<SampleCoords> coords = {{0, 0.2, 0.3, 0.5}};
  const SampledCloud base = sample_with_provenance(mesh, mesh.vertices, coords);
  const Vec3 delta(1e-4, -2e-4, 3e-4);
  Mat3X moved = mesh.vertices;
  moved.col(mesh.faces(0, 0)) += delta;
  const SampledCloud shifted = sample_with_provenance(mesh, moved, coords);
  const Vec3 observed = shifted.points.col(0) - base.points.col(0);
  CHECK((observed - 0.2 * delta).norm() < 1e-12);
}

TEST_CASE("scatter_point_gradients spreads by weight and conserves totals") {
  const TriMesh mesh = lopsided_pair();
  SampledCloud cloud;
  cloud.provenance = {{1, 0.2, 0.3, 0.5}};
  cloud.points = Mat3X::Zero(3, 1);

  Mat3X zero_grads = Mat3X::Zero(3, 1);
  CHECK(scatter_point_gradients(mesh, cloud, zero_grads).norm() == 0.0);

  Mat3X g = Mat3X::Zero(3, 1);
  g.col(0) = Vec3(1.0, -2.0, 4.0);
  const Mat3X vg = scatter_point_gradients(mesh, cloud, g);
  CHECK((vg.col(3) - 0.2 * g.col(0)).norm() < 1e-15);
  CHECK((vg.col(4) - 0.3 * g.col(0)).norm() < 1e-15);
  CHECK((vg.col(5) - 0.5 * g.col(0)).norm() < 1e-15);
  CHECK(vg.leftCols(3).norm() == 0.0);

  // Conservation on a big draw: column sums agree to 1e-10 relative.
  const TriMesh grid = build_grid_cloth(7, 7, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  const SampledCloud many = sample_surface(grid, grid.vertices, 2000, {}, 5);
  Mat3X grads(3, many.size());
  for (int i = 0; i < many.size(); ++i)
    grads.col(i) = Vec3(std::sin(0.1 * i), std::cos(0.2 * i), std::sin(0.3 * i + 1));
  const Mat3X scattered = scatter_point_gradients(grid, many, grads);
  const Vec3 total_points = grads.rowwise().sum();
  const Vec3 total_vertices = scattered.rowwise().sum();
  CHECK((total_points - total_vertices).norm() < 1e-10 * total_points.norm());

  SampledCloud no_prov = many;
  no_prov.provenance.clear();
  CHECK_THROWS_AS(scatter_point_gradients(grid, no_prov, grads), ValidationError);
}

TEST_CASE("add_gaussian_noise: sigma zero keeps points, drops provenance") {
  const TriMesh mesh = lopsided_pair();
  const SampledCloud cloud = sample_surface(mesh, mesh.vertices, 50, {}, 11);
  const SampledCloud still = add_gaussian_noise(cloud, 0.0, 3);
  CHECK(still.points == cloud.points);
  CHECK_FALSE(still.has_provenance());
}

TEST_CASE("add_gaussian_noise: sample std matches sigma, seeded reproducibly") {
  const TriMesh mesh = build_grid_cloth(7, 7, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  const int n = 100000;
  const SampledCloud cloud = sample_surface(mesh, mesh.vertices, n, {}, 21);
  const Real sigma = 0.01;
  const SampledCloud noisy = add_gaussian_noise(cloud, sigma, 77);
  const Mat3X offsets = noisy.points - cloud.points;
  for (int axis = 0; axis < 3; ++axis) {
    const Real mean = offsets.row(axis).mean();
    const Real var = (offsets.row(axis).array() - mean).square().sum() / (n - 1);
    CHECK(std::sqrt(var) == doctest::Approx(sigma).epsilon(0.02));
  }
  const SampledCloud again = add_gaussian_noise(cloud, sigma, 77);
  CHECK(again.points == noisy.points);
  const SampledCloud other = add_gaussian_noise(cloud, sigma, 78);
  CHECK(other.points != noisy.points);
}

TEST_CASE("occlusion_subset: all faces, explicit lists, random drop") {
  const TriMesh mesh = build_grid_cloth(7, 7, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  OcclusionRule all;
  const std::vector<int> everything = occlusion_subset(mesh, all);
  CHECK(int(everything.size()) == mesh.face_count());
  CHECK(std::is_sorted(everything.begin(), everything.end()));

  OcclusionRule pick;
  pick.kind = OcclusionRule::Kind::Faces;
  pick.faces = {5, 1, 9};
  const std::vector<int> picked = occlusion_subset(mesh, pick);
  CHECK(picked == std::vector<int>{1, 5, 9});

  OcclusionRule drop;
  drop.kind = OcclusionRule::Kind::RandomDrop;
  drop.fraction = 0.5;
  drop.seed = 31;
  const std::vector<int> once = occlusion_subset(mesh, drop);
  const std::vector<int> twice = occlusion_subset(mesh, drop);
  CHECK(once == twice);
  CHECK(!once.empty());
  CHECK(int(once.size()) < mesh.face_count());
}

TEST_CASE("occlusion_subset: upper half of a 7x7 grid keeps 36 faces") {
  const TriMesh mesh = build_grid_cloth(7, 7, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  OcclusionRule rule;
  rule.kind = OcclusionRule::Kind::UpperHalf;
  rule.axis = 1;
  rule.side = +1;
  const std::vector<int> kept = occlusion_subset(mesh, rule);
  CHECK(kept.size() == 36);
  // Oracle: enumerate rest centroids against the bounding-box midpoint.
  const Real mid = 0.5 * (mesh.vertices.row(1).minCoeff() + mesh.vertices.row(1).maxCoeff());
  std::vector<int> expect;
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Real cy = (mesh.vertices(1, mesh.faces(0, f)) + mesh.vertices(1, mesh.faces(1, f)) +
                     mesh.vertices(1, mesh.faces(2, f))) /
                    3.0;
    if (cy > mid) expect.push_back(f);
  }
  CHECK(kept == expect);

  // A flat grid has no extent along z, so an upper-half cut there is empty.
  OcclusionRule degenerate;
  degenerate.kind = OcclusionRule::Kind::UpperHalf;
  degenerate.axis = 2;
  degenerate.side = +1;
  CHECK_THROWS_AS(occlusion_subset(mesh, degenerate), ValidationError);
}

TEST_CASE("drop_faces is deterministic and respects the fraction bounds") {
  std::vector<int> faces(60);
  std::iota(faces.begin(), faces.end(), 0);
  const std::vector<int> a = drop_faces(faces, 0.3, 17);
  const std::vector<int> b = drop_faces(faces, 0.3, 17);
  CHECK(a == b);
  CHECK(!a.empty());
  CHECK(a.size() < faces.size());
  CHECK(drop_faces(faces, 0.0, 17) == faces);
  for (int f : a) CHECK(std::binary_search(faces.begin(), faces.end(), f));
}
