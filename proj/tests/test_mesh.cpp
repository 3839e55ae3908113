#include <doctest.h>

#include <clothfit/mesh.hpp>

#include <Eigen/Geometry>
#include <array>
#include <cmath>

using namespace clothfit;

namespace {

TriMesh one_triangle() {
  TriMesh mesh;
  mesh.vertices.resize(3, 3);
  mesh.vertices.col(0) = Vec3(0, 0, 0);
  mesh.vertices.col(1) = Vec3(1, 0, 0);
  mesh.vertices.col(2) = Vec3(0, 1, 0);
  mesh.faces.resize(3, 1);
  mesh.faces.col(0) << 0, 1, 2;
  mesh.rest_edges = {{0, 1, 1.0, SpringClass::Structural},
                     {1, 2, std::sqrt(2.0), SpringClass::Structural},
                     {2, 0, 1.0, SpringClass::Structural}};
  return mesh;
}

std::array<int, kSpringClassCount> count_by_class(const TriMesh& mesh) {
  std::array<int, kSpringClassCount> counts{};
  for (const RestEdge& e : mesh.rest_edges) counts[static_cast<int>(e.cls)]++;
  return counts;
}

}  // namespace

TEST_CASE("grid sizes: vertex and face counts") {
  const TriMesh small = build_grid_cloth(2, 2, 1.0, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  CHECK(small.vertex_count() == 4);
  CHECK(small.face_count() == 2);

  const TriMesh rect = build_grid_cloth(3, 2, 1.0, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  CHECK(rect.vertex_count() == 6);
  CHECK(rect.face_count() == 4);

  const TriMesh square = build_grid_cloth(7, 7, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  CHECK(square.vertex_count() == 49);
  CHECK(square.face_count() == 72);
}

TEST_CASE("grid vertices land on origin + i*u + j*v") {
  const Vec3 origin(0.3, -0.2, 0.5);
  const TriMesh mesh = build_grid_cloth(4, 3, 0.05, origin, Vec3::UnitX(), Vec3::UnitZ());
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 4; ++i) {
      const Vec3 expect = origin + 0.05 * i * Vec3::UnitX() + 0.05 * j * Vec3::UnitZ();
      CHECK((mesh.vertices.col(grid_vertex_index(4, i, j)) - expect).norm() < 1e-14);
    }
}

TEST_CASE("grid spring classes: counts and rest lengths") {
  const int nx = 7, ny = 5;
  const Real s = 0.05;
  const TriMesh mesh = build_grid_cloth(nx, ny, s, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  const auto counts = count_by_class(mesh);
  // Structural: axis edges plus one diagonal per cell. Shear: the other
  // diagonal. Bend: two-apart along each axis.
  CHECK(counts[0] == (nx - 1) * ny + nx * (ny - 1) + (nx - 1) * (ny - 1));
  CHECK(counts[1] == (nx - 1) * (ny - 1));
  CHECK(counts[2] == (nx - 2) * ny + nx * (ny - 2));
  for (const RestEdge& e : mesh.rest_edges) {
    const Real len = (mesh.vertices.col(e.a) - mesh.vertices.col(e.b)).norm();
    CHECK(e.rest_length == doctest::Approx(len).epsilon(1e-12));
    if (e.cls == SpringClass::Structural)
      CHECK((std::abs(len - s) < 1e-12 || std::abs(len - s * std::sqrt(2.0)) < 1e-12));
    if (e.cls == SpringClass::Shear) CHECK(len == doctest::Approx(s * std::sqrt(2.0)));
    if (e.cls == SpringClass::Bend) CHECK(len == doctest::Approx(2 * s));
  }
}

TEST_CASE("grid construction is deterministic") {
  const TriMesh a = build_grid_cloth(6, 4, 0.07, Vec3(1, 2, 3), Vec3::UnitY(), Vec3::UnitZ());
  const TriMesh b = build_grid_cloth(6, 4, 0.07, Vec3(1, 2, 3), Vec3::UnitY(), Vec3::UnitZ());
  CHECK(a.vertices == b.vertices);
  CHECK(a.faces == b.faces);
  REQUIRE(a.rest_edges.size() == b.rest_edges.size());
  for (size_t i = 0; i < a.rest_edges.size(); ++i) {
    CHECK(a.rest_edges[i].a == b.rest_edges[i].a);
    CHECK(a.rest_edges[i].b == b.rest_edges[i].b);
    CHECK(a.rest_edges[i].rest_length == b.rest_edges[i].rest_length);
    CHECK(a.rest_edges[i].cls == b.rest_edges[i].cls);
  }
}

TEST_CASE("grids pass validation; broken topology is rejected") {
  TriMesh mesh = build_grid_cloth(5, 5, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  validate_mesh(mesh);

  TriMesh bad_index = mesh;
  bad_index.faces(0, 0) = 99;
  CHECK_THROWS_AS(validate_mesh(bad_index), ValidationError);

  TriMesh degenerate = mesh;
  degenerate.faces(1, 0) = degenerate.faces(0, 0);
  CHECK_THROWS_AS(validate_mesh(degenerate), ValidationError);

  TriMesh bad_rest = mesh;
  bad_rest.rest_edges[0].rest_length = 0;
  CHECK_THROWS_AS(validate_mesh(bad_rest), ValidationError);

  TriMesh missing_edge = mesh;
  missing_edge.rest_edges.erase(missing_edge.rest_edges.begin());
  CHECK_THROWS_AS(validate_mesh(missing_edge), ValidationError);
}

TEST_CASE("face areas: unit right triangle is 1/2") {
  const TriMesh mesh = one_triangle();
  const auto geo = face_areas(mesh, mesh.vertices);
  REQUIRE(geo.size() == 1);
  CHECK(geo[0].face_index == 0);
  CHECK(geo[0].area == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(geo[0].cumulative_area == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("face areas: collapsed face contributes zero") {
  const TriMesh mesh = one_triangle();
  Mat3X collapsed = mesh.vertices;
  collapsed.col(1) = collapsed.col(0);
  collapsed.col(2) = collapsed.col(0);
  const auto geo = face_areas(mesh, collapsed);
  CHECK(geo[0].area == 0.0);
}

TEST_CASE("face areas: unit square splits into two halves, cumulative sums") {
  const TriMesh mesh = build_grid_cloth(2, 2, 1.0, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  const auto geo = face_areas(mesh, mesh.vertices);
  REQUIRE(geo.size() == 2);
  CHECK(geo[0].area == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(geo[1].area == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(geo[0].cumulative_area == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(geo[1].cumulative_area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("face areas: total rest area of a grid") {
  const int nx = 9, ny = 6;
  const Real s = 0.05;
  const TriMesh mesh = build_grid_cloth(nx, ny, s, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  const auto geo = face_areas(mesh, mesh.vertices);
  CHECK(geo.back().cumulative_area ==
        doctest::Approx((nx - 1) * (ny - 1) * s * s).epsilon(1e-12));
}

TEST_CASE("face areas are rigid-motion invariant") {
  const TriMesh mesh = build_grid_cloth(5, 4, 0.05, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY());
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.83, Vec3(1, 2, -1).normalized()).toRotationMatrix();
  Mat3X moved = rot * mesh.vertices;
  moved.colwise() += Vec3(3.2, -1.1, 0.4);
  const auto base = face_areas(mesh, mesh.vertices);
  const auto rigid = face_areas(mesh, moved);
  for (size_t i = 0; i < base.size(); ++i)
    CHECK(std::abs(base[i].area - rigid[i].area) < 1e-12);
}
