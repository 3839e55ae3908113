#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "clothfit/mesh.hpp"
#include "clothfit/types.hpp"

namespace clothfit {

// Barycentric draw for one sampled point: x = u*p0 + v*p1 + w*p2 with
// u + v + w = 1, on face `face`.
struct SampleCoords {
  int face = 0;
  Real u = 0, v = 0, w = 0;
};

struct SampledCloud {
  Mat3X points;
  std::vector<SampleCoords> provenance;  // empty once noise is applied

  int size() const { return static_cast<int>(points.cols()); }
  bool has_provenance() const { return !provenance.empty(); }
};

// Uniform-by-area surface sampling over the masked face subset. Faces are
// drawn by inverse CDF over areas at `positions`, barycentric coordinates by
// the square-root scheme (u,v,w) = (1-sqrt(r1), sqrt(r1)(1-r2), sqrt(r1) r2).
// face_mask empty means "all faces". Throws ValidationError when the masked
// area is zero or n < 1.
SampledCloud sample_surface(const TriMesh& mesh, const Mat3X& positions, int n,
                            const std::vector<int>& face_mask, std::uint64_t seed);

// Re-evaluates previously drawn coordinates at (possibly different) positions.
// This is the function differentiated by the gradient path: the draws are
// constants, only the vertex positions vary.
SampledCloud sample_with_provenance(const TriMesh& mesh, const Mat3X& positions,
                                    const std::vector<SampleCoords>& provenance);

// d(point)/d(vertex k of its face) is coords[k] * I; returned as the triple.
Vec3 point_vertex_jacobian(const SampleCoords& coords);

// Pushes per-point position gradients back onto the mesh vertices through the
// barycentric weights. Requires provenance.
Mat3X scatter_point_gradients(const TriMesh& mesh, const SampledCloud& cloud,
                              const Mat3X& point_grads);

// Adds isotropic Gaussian noise (std sigma per coordinate) and drops
// provenance; sigma = 0 still drops provenance but leaves points bit-identical.
SampledCloud add_gaussian_noise(const SampledCloud& cloud, Real sigma, std::uint64_t seed);

struct OcclusionRule {
  enum class Kind { All, UpperHalf, Faces, RandomDrop };
  Kind kind = Kind::All;
  // UpperHalf: keep faces whose rest centroid along `axis` lies strictly on
  // `side` (+1 above / -1 below) of the rest bounding-box midpoint.
  int axis = 2;
  int side = +1;
  std::vector<int> faces;  // Faces
  Real fraction = 0;       // RandomDrop: independent per-face drop probability
  std::uint64_t seed = 0;  // RandomDrop
};

// Resolves a rule to a sorted face-index subset. Throws ValidationError when
// the result is empty or the rule is malformed.
std::vector<int> occlusion_subset(const TriMesh& mesh, const OcclusionRule& rule);

// Independent per-face dropout over an existing subset (used for target
// augmentation on top of an occlusion mask).
std::vector<int> drop_faces(const std::vector<int>& faces, Real fraction, std::uint64_t seed);

}  // namespace clothfit
