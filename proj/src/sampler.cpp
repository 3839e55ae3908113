#include "clothfit/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace clothfit {

SampledCloud sample_surface(const TriMesh& mesh, const Mat3X& positions, int n,
                            const std::vector<int>& face_mask, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample_surface: need at least one sample");
  if (positions.cols() != mesh.vertices.cols())
    throw ValidationError("sample_surface: positions count does not match mesh");

  std::vector<int> mask = face_mask;
  if (mask.empty()) {
    mask.resize(mesh.face_count());
    for (int f = 0; f < mesh.face_count(); ++f) mask[f] = f;
  }
  for (int f : mask)
    if (f < 0 || f >= mesh.face_count())
      throw ValidationError("sample_surface: face mask index out of range");

  const std::vector<FaceGeometry> all = face_areas(mesh, positions);
  std::vector<Real> cum(mask.size());
  Real total = 0;
  for (size_t k = 0; k < mask.size(); ++k) {
    total += all[mask[k]].area;
    cum[k] = total;
  }
  if (!(total > 0)) throw ValidationError("sample_surface: masked faces have zero total area");

  Rng rng(seed);
  SampledCloud cloud;
  cloud.points.resize(3, n);
  cloud.provenance.resize(n);
  for (int i = 0; i < n; ++i) {
    const Real pick = rng.uniform01() * total;
    const size_t k = std::min<size_t>(
        std::upper_bound(cum.begin(), cum.end(), pick) - cum.begin(), mask.size() - 1);
    const Real r1 = rng.uniform01();
    const Real r2 = rng.uniform01();
    const Real sq = std::sqrt(r1);
    SampleCoords c;
    c.face = mask[k];
    c.u = 1.0 - sq;
    c.v = sq * (1.0 - r2);
    c.w = sq * r2;
    cloud.provenance[i] = c;
    const Eigen::Vector3i tri = mesh.faces.col(c.face);
    cloud.points.col(i) = c.u * positions.col(tri[0]) + c.v * positions.col(tri[1]) +
                          c.w * positions.col(tri[2]);
  }
  return cloud;
}

SampledCloud sample_with_provenance(const TriMesh& mesh, const Mat3X& positions,
                                    const std::vector<SampleCoords>& provenance) {
  if (positions.cols() != mesh.vertices.cols())
    throw ValidationError("sample_with_provenance: positions count does not match mesh");
  SampledCloud cloud;
  cloud.points.resize(3, static_cast<Eigen::Index>(provenance.size()));
  cloud.provenance = provenance;
  for (size_t i = 0; i < provenance.size(); ++i) {
    const SampleCoords& c = provenance[i];
    if (c.face < 0 || c.face >= mesh.face_count())
      throw ValidationError("sample_with_provenance: face index out of range");
    const Eigen::Vector3i tri = mesh.faces.col(c.face);
    cloud.points.col(static_cast<Eigen::Index>(i)) = c.u * positions.col(tri[0]) +
                                                     c.v * positions.col(tri[1]) +
                                                     c.w * positions.col(tri[2]);
  }
  return cloud;
}

Vec3 point_vertex_jacobian(const SampleCoords& coords) {
  return Vec3(coords.u, coords.v, coords.w);
}

Mat3X scatter_point_gradients(const TriMesh& mesh, const SampledCloud& cloud,
                              const Mat3X& point_grads) {
  if (!cloud.has_provenance())
    throw ValidationError("scatter_point_gradients: cloud has no provenance");
  if (point_grads.cols() != cloud.points.cols())
    throw ValidationError("scatter_point_gradients: gradient count does not match cloud");
  Mat3X out = Mat3X::Zero(3, mesh.vertex_count());
  for (int i = 0; i < cloud.size(); ++i) {
    const SampleCoords& c = cloud.provenance[i];
    const Eigen::Vector3i tri = mesh.faces.col(c.face);
    const Vec3 g = point_grads.col(i);
    out.col(tri[0]) += c.u * g;
    out.col(tri[1]) += c.v * g;
    out.col(tri[2]) += c.w * g;
  }
  return out;
}

SampledCloud add_gaussian_noise(const SampledCloud& cloud, Real sigma, std::uint64_t seed) {
  if (sigma < 0) throw ValidationError("add_gaussian_noise: sigma must be non-negative");
  SampledCloud out;
  out.points = cloud.points;
  Rng rng(seed);
  for (int i = 0; i < cloud.size(); ++i)
    for (int k = 0; k < 3; ++k) out.points(k, i) += sigma * rng.gaussian();
  return out;
}

std::vector<int> occlusion_subset(const TriMesh& mesh, const OcclusionRule& rule) {
  std::vector<int> out;
  switch (rule.kind) {
    case OcclusionRule::Kind::All:
      out.resize(mesh.face_count());
      for (int f = 0; f < mesh.face_count(); ++f) out[f] = f;
      break;
    case OcclusionRule::Kind::UpperHalf: {
      if (rule.axis < 0 || rule.axis > 2)
        throw ValidationError("occlusion_subset: axis must be 0, 1, or 2");
      if (rule.side != 1 && rule.side != -1)
        throw ValidationError("occlusion_subset: side must be +1 or -1");
      const Real lo = mesh.vertices.row(rule.axis).minCoeff();
      const Real hi = mesh.vertices.row(rule.axis).maxCoeff();
      const Real mid = 0.5 * (lo + hi);
      for (int f = 0; f < mesh.face_count(); ++f) {
        const Eigen::Vector3i tri = mesh.faces.col(f);
        const Real centroid = (mesh.vertices(rule.axis, tri[0]) +
                               mesh.vertices(rule.axis, tri[1]) +
                               mesh.vertices(rule.axis, tri[2])) / 3.0;
        if (Real(rule.side) * (centroid - mid) > 0) out.push_back(f);
      }
      break;
    }
    case OcclusionRule::Kind::Faces:
      out = rule.faces;
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      for (int f : out)
        if (f < 0 || f >= mesh.face_count())
          throw ValidationError("occlusion_subset: face index out of range");
      break;
    case OcclusionRule::Kind::RandomDrop: {
      if (rule.fraction < 0 || rule.fraction >= 1)
        throw ValidationError("occlusion_subset: drop fraction must be in [0, 1)");
      Rng rng(rule.seed);
      for (int f = 0; f < mesh.face_count(); ++f)
        if (rng.uniform01() >= rule.fraction) out.push_back(f);
      break;
    }
  }
  if (out.empty()) throw ValidationError("occlusion_subset: rule leaves no faces");
  return out;
}

std::vector<int> drop_faces(const std::vector<int>& faces, Real fraction, std::uint64_t seed) {
  if (fraction < 0 || fraction >= 1)
    throw ValidationError("drop_faces: fraction must be in [0, 1)");
  if (fraction == 0) return faces;
  Rng rng(seed);
  std::vector<int> out;
  out.reserve(faces.size());
  for (int f : faces)
    if (rng.uniform01() >= fraction) out.push_back(f);
  if (out.empty()) throw ValidationError("drop_faces: dropout removed every face");
  return out;
}

}  // namespace clothfit
