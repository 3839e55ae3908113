#pragma once

#include <iosfwd>
#include <vector>

#include "clothfit/types.hpp"

namespace clothfit {

enum class SpringClass : int { Structural = 0, Shear = 1, Bend = 2 };
inline constexpr int kSpringClassCount = 3;
const char* spring_class_name(SpringClass c);

struct RestEdge {
  int a = 0;
  int b = 0;
  Real rest_length = 0;
  SpringClass cls = SpringClass::Structural;
};

// Rest-pose triangle mesh plus the spring topology built over it. `vertices`
// double as the initial world positions. Every face edge is a structural spring.
struct TriMesh {
  Mat3X vertices;
  FaceMat faces;
  std::vector<RestEdge> rest_edges;

  int vertex_count() const { return static_cast<int>(vertices.cols()); }
  int face_count() const { return static_cast<int>(faces.cols()); }
};

inline int grid_vertex_index(int nx, int i, int j) { return j * nx + i; }

// Regular nx-by-ny grid spanned by the (orthonormal) in-plane axes. Each cell
// is split along its axis_u+axis_v diagonal into two triangles; that diagonal
// is a structural spring, the opposite one is the shear spring, and bending
// springs join vertices two apart along each axis.
TriMesh build_grid_cloth(int nx, int ny, Real spacing, const Vec3& origin,
                         const Vec3& axis_u, const Vec3& axis_v);

// Throws ValidationError on malformed topology (bad indices, degenerate faces,
// non-positive rest lengths, face edges missing from the structural set).
void validate_mesh(const TriMesh& mesh);

struct FaceGeometry {
  int face_index = 0;
  Real area = 0;
  Real cumulative_area = 0;
};

// Areas at the given deformed positions, in face order, with a running
// cumulative sum (last entry holds the total). Degenerate faces get area 0.
std::vector<FaceGeometry> face_areas(const TriMesh& mesh, const Mat3X& positions);

void write_ply(std::ostream& os, const Mat3X& positions, const FaceMat& faces);

}  // namespace clothfit
