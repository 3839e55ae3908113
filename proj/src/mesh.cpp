#include "clothfit/mesh.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <utility>

namespace clothfit {

const char* spring_class_name(SpringClass c) {
  switch (c) {
    case SpringClass::Structural: return "structural";
    case SpringClass::Shear: return "shear";
    case SpringClass::Bend: return "bend";
  }
  return "unknown";
}

namespace {

void add_edge(TriMesh& mesh, int a, int b, SpringClass cls) {
  RestEdge e;
  e.a = a;
  e.b = b;
  e.rest_length = (mesh.vertices.col(b) - mesh.vertices.col(a)).norm();
  e.cls = cls;
  mesh.rest_edges.push_back(e);
}

}  // namespace

TriMesh build_grid_cloth(int nx, int ny, Real spacing, const Vec3& origin,
                         const Vec3& axis_u, const Vec3& axis_v) {
  if (nx < 2 || ny < 2) throw ValidationError("grid cloth needs nx >= 2 and ny >= 2");
  if (spacing <= 0) throw ValidationError("grid spacing must be positive");
  if (std::abs(axis_u.norm() - 1.0) > 1e-9 || std::abs(axis_v.norm() - 1.0) > 1e-9 ||
      std::abs(axis_u.dot(axis_v)) > 1e-9) {
    throw ValidationError("grid axes must be orthonormal");
  }

  TriMesh mesh;
  mesh.vertices.resize(3, nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      mesh.vertices.col(grid_vertex_index(nx, i, j)) =
          origin + spacing * (Real(i) * axis_u + Real(j) * axis_v);

  const int cells_x = nx - 1;
  const int cells_y = ny - 1;
  mesh.faces.resize(3, 2 * cells_x * cells_y);
  int f = 0;
  for (int j = 0; j < cells_y; ++j) {
    for (int i = 0; i < cells_x; ++i) {
      const int a = grid_vertex_index(nx, i, j);          // lower-left
      const int b = grid_vertex_index(nx, i + 1, j);      // lower-right
      const int c = grid_vertex_index(nx, i, j + 1);      // upper-left
      const int d = grid_vertex_index(nx, i + 1, j + 1);  // upper-right
      mesh.faces.col(f++) = Eigen::Vector3i(a, b, d);
      mesh.faces.col(f++) = Eigen::Vector3i(a, d, c);
    }
  }

  // Structural: grid edges plus the face-split (a,d) diagonal of each cell,
  // so the face edge set stays inside the structural class.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      add_edge(mesh, grid_vertex_index(nx, i, j), grid_vertex_index(nx, i + 1, j),
               SpringClass::Structural);
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i)
      add_edge(mesh, grid_vertex_index(nx, i, j), grid_vertex_index(nx, i, j + 1),
               SpringClass::Structural);
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      add_edge(mesh, grid_vertex_index(nx, i, j), grid_vertex_index(nx, i + 1, j + 1),
               SpringClass::Structural);
      add_edge(mesh, grid_vertex_index(nx, i + 1, j), grid_vertex_index(nx, i, j + 1),
               SpringClass::Shear);
    }
  }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 2 < nx; ++i)
      add_edge(mesh, grid_vertex_index(nx, i, j), grid_vertex_index(nx, i + 2, j),
               SpringClass::Bend);
  for (int j = 0; j + 2 < ny; ++j)
    for (int i = 0; i < nx; ++i)
      add_edge(mesh, grid_vertex_index(nx, i, j), grid_vertex_index(nx, i, j + 2),
               SpringClass::Bend);

  validate_mesh(mesh);
  return mesh;
}

void validate_mesh(const TriMesh& mesh) {
  const int nv = mesh.vertex_count();
  if (nv == 0) throw ValidationError("mesh has no vertices");
  if (!mesh.vertices.allFinite()) throw ValidationError("mesh vertices contain non-finite values");

  std::set<std::pair<int, int>> structural;
  for (const RestEdge& e : mesh.rest_edges) {
    if (e.a < 0 || e.a >= nv || e.b < 0 || e.b >= nv || e.a == e.b)
      throw ValidationError("rest edge references invalid vertices");
    if (!(e.rest_length > 0)) throw ValidationError("rest edge with non-positive rest length");
    if (e.cls == SpringClass::Structural)
      structural.insert({std::min(e.a, e.b), std::max(e.a, e.b)});
  }

  for (int f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3i tri = mesh.faces.col(f);
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      if (a < 0 || a >= nv || b < 0 || b >= nv)
        throw ValidationError("face references invalid vertices");
      if (a == b) throw ValidationError("face with repeated vertices");
      if (!structural.count({std::min(a, b), std::max(a, b)}))
        throw ValidationError("face edge missing from the structural spring set");
    }
  }
}

std::vector<FaceGeometry> face_areas(const TriMesh& mesh, const Mat3X& positions) {
  if (positions.cols() != mesh.vertices.cols())
    throw ValidationError("face_areas: positions count does not match mesh");
  std::vector<FaceGeometry> out(mesh.face_count());
  Real cum = 0;
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3i tri = mesh.faces.col(f);
    const Vec3 e1 = positions.col(tri[1]) - positions.col(tri[0]);
    const Vec3 e2 = positions.col(tri[2]) - positions.col(tri[0]);
    const Real area = 0.5 * e1.cross(e2).norm();
    cum += area;
    out[f] = FaceGeometry{f, area, cum};
  }
  return out;
}

void write_ply(std::ostream& os, const Mat3X& positions, const FaceMat& faces) {
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << positions.cols() << "\n";
  os << "property double x\nproperty double y\nproperty double z\n";
  os << "element face " << faces.cols() << "\n";
  os << "property list uchar int vertex_indices\n";
  os << "end_header\n";
  char buf[96];
  for (Eigen::Index v = 0; v < positions.cols(); ++v) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", positions(0, v), positions(1, v),
                  positions(2, v));
    os << buf;
  }
  for (Eigen::Index f = 0; f < faces.cols(); ++f)
    os << "3 " << faces(0, f) << " " << faces(1, f) << " " << faces(2, f) << "\n";
}

}  // namespace clothfit
