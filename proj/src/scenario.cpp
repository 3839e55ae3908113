#include "clothfit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace clothfit {
namespace {

constexpr Real kFrameDt = 0.1;
constexpr Real kGridSpacing = 0.05;
constexpr Real kSurfaceDensity = 0.025;

SimParams base_material() {
  SimParams p;
  p.base_mass_per_vertex = 0.002;
  p.base_stiffness = {80.0, 40.0, 2.0};
  // Damping is deliberately light: at w_mass = 0.1 internal modes settle well
  // within the horizon while at w_mass = 10 they persist, which keeps
  // equal-ratio parameter corners distinguishable through the point clouds.
  p.damping = {0.06, 0.03, 0.006};
  p.gravity = Vec3(0, 0, -9.8);
  p.contact_stiffness = 100.0;
  p.contact_friction_scale = 0.15;
  return p;
}

// Computes the stability-bound substep count and derives dt from the fixed
// frame period.
void finalize_timing(ScenarioSpec& spec) {
  const TriMesh mesh = build_mesh(spec);
  spec.substeps_per_frame = stable_substeps(mesh, spec.material, spec.param_range,
                                            !spec.obstacles.empty(), kFrameDt);
  spec.dt = kFrameDt / spec.substeps_per_frame;
}

Mat3X linear_track(const Vec3& start, const Vec3& delta, int frames) {
  Mat3X way(3, frames + 1);
  for (int f = 0; f <= frames; ++f) way.col(f) = start + (Real(f) / frames) * delta;
  return way;
}

void check(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

TriMesh build_mesh(const ScenarioSpec& spec) {
  return build_grid_cloth(spec.grid.nx, spec.grid.ny, spec.grid.spacing, spec.grid.origin,
                          spec.grid.axis_u, spec.grid.axis_v);
}

SimParams make_params(const ScenarioSpec& spec, Real w_stiff, Real w_mass) {
  SimParams p = spec.material;
  p.w_stiff = w_stiff;
  p.w_mass = w_mass;
  validate_params(p);
  return p;
}

Real cloth_diagonal(const ScenarioSpec& spec) {
  return spec.grid.spacing * std::hypot(Real(spec.grid.nx - 1), Real(spec.grid.ny - 1));
}

void validate_scenario(const ScenarioSpec& spec) {
  check(!spec.name.empty(), "scenario name is empty");
  const TriMesh mesh = build_mesh(spec);
  validate_params(spec.material);
  check(spec.horizon_frames >= 1, "horizon must be at least one frame");
  check(spec.substeps_per_frame >= 1, "substeps_per_frame must be positive");
  check(std::isfinite(spec.dt) && spec.dt > 0, "dt must be positive");
  check(spec.samples_per_frame >= 1, "samples_per_frame must be positive");
  check(std::isfinite(spec.param_range.lo) && spec.param_range.lo > 0 &&
            spec.param_range.lo < spec.param_range.hi,
        "parameter range must satisfy 0 < lo < hi");
  check(!spec.loss_frames.empty(), "loss_frames is empty");
  for (size_t i = 0; i < spec.loss_frames.size(); ++i) {
    const int f = spec.loss_frames[i];
    check(f >= 0 && f <= spec.horizon_frames, "loss frame outside 0..horizon");
    if (i > 0) check(f > spec.loss_frames[i - 1], "loss_frames must be strictly increasing");
  }
  std::set<int> anchored;
  for (const AnchorTrack& a : spec.anchors) {
    check(a.vertex >= 0 && a.vertex < mesh.vertex_count(), "anchor vertex out of range");
    check(anchored.insert(a.vertex).second, "duplicate anchor vertex");
    check(a.waypoints.cols() == spec.horizon_frames + 1, "anchor needs horizon+1 waypoints");
    check(a.waypoints.allFinite(), "anchor waypoints must be finite");
  }
  for (const Obstacle& ob : spec.obstacles) {
    check(ob.point.allFinite() && ob.direction.allFinite(), "obstacle geometry must be finite");
    check(std::abs(ob.direction.norm() - 1.0) < 1e-9, "obstacle direction must be unit length");
    if (ob.shape == Obstacle::Shape::Cylinder) {
      check(ob.radius > 0, "cylinder radius must be positive");
      check(ob.half_length > 0, "cylinder half_length must be positive");
    }
  }
  occlusion_subset(mesh, spec.occlusion);  // throws when the rule is malformed or empty
}

Trajectory rollout(const ScenarioSpec& spec, const SimParams& params) {
  const TriMesh mesh = build_mesh(spec);
  return rollout(mesh, params, spec.anchors, spec.obstacles, spec.horizon_frames,
                 spec.substeps_per_frame, spec.dt);
}

ParamGrad rollout_grad(const ScenarioSpec& spec, const SimParams& params, const Trajectory& traj,
                       const std::vector<FrameAdjoint>& loss_adjoint) {
  const TriMesh mesh = build_mesh(spec);
  return rollout_grad(mesh, params, spec.anchors, spec.obstacles, traj, loss_adjoint,
                      spec.loss_frames);
}

int stable_substeps(const TriMesh& mesh, const SimParams& material, const ParamRange& range,
                    bool has_obstacles, Real frame_dt) {
  check(frame_dt > 0, "frame_dt must be positive");
  std::vector<Real> k_sum(mesh.vertex_count(), 0.0);
  std::vector<Real> c_sum(mesh.vertex_count(), 0.0);
  for (const RestEdge& e : mesh.rest_edges) {
    const Real k = range.hi * material.base_stiffness[int(e.cls)];
    const Real c = material.damping[int(e.cls)];
    k_sum[e.a] += k;
    k_sum[e.b] += k;
    c_sum[e.a] += c;
    c_sum[e.b] += c;
  }
  Real k_max = *std::max_element(k_sum.begin(), k_sum.end());
  Real c_max = *std::max_element(c_sum.begin(), c_sum.end());
  if (has_obstacles) {
    k_max += material.contact_stiffness;
    c_max += material.contact_friction_scale;
  }
  const Real m_min = range.lo * material.base_mass_per_vertex;
  // Gershgorin bounds: stiffness eigenvalues <= 2 k_max, damping <= 2 c_max.
  // Symplectic Euler needs dt < 2/omega_max and dt < m/c_max; halve both.
  const Real dt_k = 0.5 * std::sqrt(2.0 * m_min / k_max);
  const Real dt_c = c_max > 0 ? 0.5 * m_min / c_max : dt_k;
  const Real dt_limit = std::min(dt_k, dt_c);
  return std::max(1, int(std::ceil(frame_dt / dt_limit)));
}

ScenarioSpec make_lift(int n, int frames) {
  check(n >= 2 && frames >= 1, "lift needs n >= 2 and frames >= 1");
  ScenarioSpec spec;
  spec.name = "lift";
  spec.grid = {n, n, kGridSpacing, Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()};
  spec.material = base_material();
  spec.horizon_frames = frames;
  spec.loss_frames = {frames};

  Obstacle floor;
  floor.shape = Obstacle::Shape::Plane;
  floor.point = Vec3::Zero();
  floor.direction = Vec3::UnitZ();
  spec.obstacles.push_back(floor);

  const Real rise = 1.35 * cloth_diagonal(spec);
  AnchorTrack grasp;
  grasp.vertex = grid_vertex_index(n, 0, 0);
  grasp.waypoints = linear_track(spec.grid.origin, Vec3(0, 0, rise), frames);
  spec.anchors.push_back(grasp);

  finalize_timing(spec);
  return spec;
}

ScenarioSpec make_fold(int n, int frames) {
  check(n >= 2 && frames >= 2, "fold needs n >= 2 and frames >= 2");
  ScenarioSpec spec;
  spec.name = "fold";
  const Real rt = std::sqrt(0.5);
  spec.grid = {n, n, kGridSpacing, Vec3::Zero(), Vec3(rt, rt, 0), Vec3(-rt, rt, 0)};
  spec.material = base_material();
  spec.horizon_frames = frames;
  spec.loss_frames = {frames / 2};
  spec.occlusion.kind = OcclusionRule::Kind::UpperHalf;
  spec.occlusion.axis = 0;
  spec.occlusion.side = -1;  // the half carried by the grasped corner

  Obstacle floor;
  floor.shape = Obstacle::Shape::Plane;
  floor.point = Vec3::Zero();
  floor.direction = Vec3::UnitZ();
  spec.obstacles.push_back(floor);

  // Grasped corner starts at (-radius, y0, 0), lands on the opposite corner at
  // (+radius, y0, 0) after a semicircular arc in the x-z plane. The arc ends
  // before the horizon so the loss frame catches the cloth mid-fall, where its
  // motion still depends on both parameters rather than on statics alone.
  const Real radius = (n - 1) * kGridSpacing * rt;
  const int arc_frames = std::max(1, 13 * frames / 25);
  AnchorTrack grasp;
  grasp.vertex = grid_vertex_index(n, 0, n - 1);
  grasp.waypoints.resize(3, frames + 1);
  for (int f = 0; f <= frames; ++f) {
    const Real theta = kPi * std::min<Real>(1.0, Real(f) / arc_frames);
    grasp.waypoints.col(f) = Vec3(-radius * std::cos(theta), radius, radius * std::sin(theta));
  }
  spec.anchors.push_back(grasp);

  finalize_timing(spec);
  return spec;
}

ScenarioSpec make_band_stretch(int nx, int ny, int frames) {
  check(nx >= 3 && ny >= 2 && frames >= 1, "band_stretch needs nx >= 3, ny >= 2, frames >= 1");
  ScenarioSpec spec;
  spec.name = "band_stretch";
  spec.grid = {nx, ny, kGridSpacing, Vec3(0, 0, 0.5), Vec3::UnitX(), Vec3::UnitY()};
  spec.material = base_material();
  spec.material.contact_stiffness = 300.0;
  spec.horizon_frames = frames;
  spec.loss_frames = {frames};

  const Real span = (nx - 1) * kGridSpacing;
  Obstacle pole;
  pole.shape = Obstacle::Shape::Cylinder;
  pole.point = Vec3(0.5 * span, -0.06, 0.15);
  pole.direction = Vec3::UnitZ();
  pole.radius = 0.04;
  pole.half_length = 0.45;
  spec.obstacles.push_back(pole);

  // Both short-edge vertex columns are carried sideways past the pole, then
  // held so the loss frame sees the wrap settling out of its swing.
  const Vec3 pull(0, -0.26, 0);
  const int move_frames = std::max(1, 3 * frames / 4);
  const TriMesh mesh = build_grid_cloth(nx, ny, kGridSpacing, spec.grid.origin, spec.grid.axis_u,
                                        spec.grid.axis_v);
  for (int j = 0; j < ny; ++j) {
    for (int i : {0, nx - 1}) {
      AnchorTrack a;
      a.vertex = grid_vertex_index(nx, i, j);
      a.waypoints.resize(3, frames + 1);
      for (int f = 0; f <= frames; ++f) {
        const Real s = std::min<Real>(1.0, Real(f) / move_frames);
        a.waypoints.col(f) = mesh.vertices.col(a.vertex) + s * pull;
      }
      spec.anchors.push_back(a);
    }
  }

  finalize_timing(spec);
  return spec;
}

bool is_builtin_scenario(const std::string& name) {
  return name == "lift" || name == "fold" || name == "band_stretch";
}

ScenarioSpec make_scenario(const std::string& name) {
  if (name == "lift") return make_lift();
  if (name == "fold") return make_fold();
  if (name == "band_stretch") return make_band_stretch();
  throw ValidationError("unknown scenario: " + name);
}

ScenarioSpec make_scenario_sized(const std::string& name, int resolution, int frames) {
  check(resolution >= 2, "resolution must be at least 2");
  check(frames >= 2, "frames must be at least 2");
  if (name == "lift") return make_lift(resolution, frames);
  if (name == "fold") return make_fold(resolution, frames);
  if (name == "band_stretch")
    return make_band_stretch(2 * resolution + 1, std::min(3, resolution), frames);
  throw ValidationError("unknown scenario: " + name);
}

Mat3X obstacle_surface_points(const Obstacle& ob, Real point_spacing) {
  check(point_spacing > 0, "point_spacing must be positive");
  if (ob.shape != Obstacle::Shape::Cylinder) return Mat3X(3, 0);
  const Vec3 axis = ob.direction.normalized();
  // Any unit vector off-axis seeds an orthonormal frame around the cylinder.
  Vec3 seed = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = (seed - seed.dot(axis) * axis).normalized();
  const Vec3 e2 = axis.cross(e1);
  const int n_axial = std::max(2, int(std::lround(2 * ob.half_length / point_spacing)) + 1);
  const int n_ring = std::max(8, int(std::lround(2 * kPi * ob.radius / point_spacing)));
  Mat3X pts(3, size_t(n_axial) * n_ring);
  int col = 0;
  for (int ia = 0; ia < n_axial; ++ia) {
    const Real h = -ob.half_length + 2 * ob.half_length * ia / (n_axial - 1);
    for (int ir = 0; ir < n_ring; ++ir) {
      const Real ang = 2 * kPi * ir / n_ring;
      pts.col(col++) =
          ob.point + h * axis + ob.radius * (std::cos(ang) * e1 + std::sin(ang) * e2);
    }
  }
  return pts;
}

TargetSequence generate_target(const ScenarioSpec& spec, Real w_stiff, Real w_mass,
                               std::uint64_t seed, const AugmentSpec& augment) {
  validate_scenario(spec);
  check(std::isfinite(w_stiff) && std::isfinite(w_mass), "target parameters must be finite");
  check(w_stiff >= spec.param_range.lo && w_stiff <= spec.param_range.hi &&
            w_mass >= spec.param_range.lo && w_mass <= spec.param_range.hi,
        "target parameters outside the scenario parameter range");
  check(augment.noise_sigma >= 0, "noise_sigma must be non-negative");
  check(augment.drop_fraction >= 0 && augment.drop_fraction < 1,
        "drop_fraction must lie in [0, 1)");

  const TriMesh mesh = build_mesh(spec);
  const SimParams params = make_params(spec, w_stiff, w_mass);
  const Trajectory traj = rollout(mesh, params, spec.anchors, spec.obstacles, spec.horizon_frames,
                                  spec.substeps_per_frame, spec.dt);
  const std::vector<int> mask = occlusion_subset(mesh, spec.occlusion);

  Mat3X fixture(3, 0);
  for (const Obstacle& ob : spec.obstacles) {
    const Mat3X pts = obstacle_surface_points(ob, kSurfaceDensity);
    if (pts.cols() == 0) continue;
    const auto old = fixture.cols();
    fixture.conservativeResize(3, old + pts.cols());
    fixture.rightCols(pts.cols()) = pts;
  }

  TargetSequence target;
  target.frames.resize(spec.horizon_frames + 1);
  for (int f = 0; f <= spec.horizon_frames; ++f) {
    std::vector<int> faces = mask;
    if (augment.drop_fraction > 0)
      faces = drop_faces(mask, augment.drop_fraction, mix_seed(seed, 2, std::uint64_t(f)));
    SampledCloud cloud = sample_surface(mesh, traj.frame_state(f).positions,
                                        spec.samples_per_frame, faces, mix_seed(seed, 1, std::uint64_t(f)));
    Mat3X pts = std::move(cloud.points);
    if (fixture.cols() > 0) {
      const auto old = pts.cols();
      pts.conservativeResize(3, old + fixture.cols());
      pts.rightCols(fixture.cols()) = fixture;
    }
    if (augment.noise_sigma > 0) {
      SampledCloud shaken{std::move(pts), {}};
      pts = add_gaussian_noise(shaken, augment.noise_sigma, mix_seed(seed, 3, std::uint64_t(f))).points;
    }
    target.frames[f] = std::move(pts);
  }

  target.meta.scenario_name = spec.name;
  target.meta.true_w_stiff = w_stiff;
  target.meta.true_w_mass = w_mass;
  target.meta.has_true_params = true;
  target.meta.seed = seed;
  target.meta.augment = augment;
  target.meta.samples_per_frame = spec.samples_per_frame;
  return target;
}

LossBreakdown frame_losses(const TriMesh& mesh, const ScenarioSpec& spec, const Trajectory& traj,
                           const TargetSequence& target, std::uint64_t sample_seed) {
  check(int(target.frames.size()) == spec.horizon_frames + 1,
        "target frame count does not match the scenario horizon");
  const std::vector<int> mask = occlusion_subset(mesh, spec.occlusion);
  LossBreakdown out;
  out.frames.reserve(spec.loss_frames.size());
  for (int f : spec.loss_frames) {
    SampledCloud cloud = sample_surface(mesh, traj.frame_state(f).positions,
                                        spec.samples_per_frame, mask,
                                        mix_seed(sample_seed, std::uint64_t(f)));
    FrameLoss fl;
    fl.frame = f;
    fl.report = unidirectional_chamfer(cloud.points, target.frames[f], f);
    fl.cloud = std::move(cloud);
    out.total += fl.report.value;
    out.frames.push_back(std::move(fl));
  }
  return out;
}

Real evaluate_alignment(const ScenarioSpec& spec, Real w_stiff, Real w_mass,
                        const TargetSequence& target, std::uint64_t seed) {
  validate_scenario(spec);
  const TriMesh mesh = build_mesh(spec);
  const SimParams params = make_params(spec, w_stiff, w_mass);
  const Trajectory traj = rollout(mesh, params, spec.anchors, spec.obstacles, spec.horizon_frames,
                                  spec.substeps_per_frame, spec.dt);
  return frame_losses(mesh, spec, traj, target, mix_seed(seed, 0)).total;
}

}  // namespace clothfit
