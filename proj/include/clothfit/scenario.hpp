#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clothfit/chamfer.hpp"
#include "clothfit/sampler.hpp"
#include "clothfit/sim.hpp"
#include "clothfit/types.hpp"

namespace clothfit {

struct GridRecipe {
  int nx = 7;
  int ny = 7;
  Real spacing = 0.05;
  Vec3 origin = Vec3::Zero();
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
};

struct ParamRange {
  Real lo = 0.1;
  Real hi = 10.0;
};

// Complete recipe for one episode: cloth, world, schedule, observation model,
// and the base material the multipliers act on.
struct ScenarioSpec {
  std::string name;
  GridRecipe grid;
  SimParams material;  // multipliers kept at 1 here
  std::vector<AnchorTrack> anchors;
  std::vector<Obstacle> obstacles;
  int horizon_frames = 25;
  int substeps_per_frame = 1;
  Real dt = 0;  // seconds per substep; dt * substeps_per_frame is the frame period
  std::vector<int> loss_frames;
  OcclusionRule occlusion;
  int samples_per_frame = 3500;
  ParamRange param_range;
};

TriMesh build_mesh(const ScenarioSpec& spec);
void validate_scenario(const ScenarioSpec& spec);
SimParams make_params(const ScenarioSpec& spec, Real w_stiff, Real w_mass);
Real cloth_diagonal(const ScenarioSpec& spec);

Trajectory rollout(const ScenarioSpec& spec, const SimParams& params);
ParamGrad rollout_grad(const ScenarioSpec& spec, const SimParams& params, const Trajectory& traj,
                       const std::vector<FrameAdjoint>& loss_adjoint);

// Substep count such that dt = frame_dt / substeps respects the integrator
// stability bound at the worst corner of the parameter range: per-vertex
// incident stiffness/damping sums (Gershgorin) at w_stiff = hi, mass at
// w_mass = lo, safety factor 0.5 on each.
int stable_substeps(const TriMesh& mesh, const SimParams& material, const ParamRange& range,
                    bool has_obstacles, Real frame_dt);

// Corner of a flat cloth on the floor keyframed straight up; loss on the final
// frame, nothing occluded.
ScenarioSpec make_lift(int n = 7, int frames = 25);
// Diamond-oriented cloth on the floor; grasped corner travels a semicircular
// arc onto the opposite corner. Loss mid-fold; only the moving half is
// observed (and sampled).
ScenarioSpec make_fold(int n = 7, int frames = 25);
// Horizontal strip with both short-edge vertex columns keyframed, dragged
// sideways into a tall vertical cylinder. Loss on the final frame; targets
// include the pole surface.
ScenarioSpec make_band_stretch(int nx = 13, int ny = 3, int frames = 25);

// Dispatch by scenario name ("lift", "fold", "band_stretch").
ScenarioSpec make_scenario(const std::string& name);
// Reduced-size variant for gradient checking (resolution caps the grid).
ScenarioSpec make_scenario_sized(const std::string& name, int resolution, int frames);
bool is_builtin_scenario(const std::string& name);

struct AugmentSpec {
  Real noise_sigma = 0;    // absolute std per coordinate, meters
  Real drop_fraction = 0;  // per-face dropout probability per frame
};

struct TargetMeta {
  std::string scenario_name;
  Real true_w_stiff = 0;
  Real true_w_mass = 0;
  bool has_true_params = false;
  std::uint64_t seed = 0;
  AugmentSpec augment;
  int samples_per_frame = 0;
};

// One observed point cloud per frame, 0..T inclusive.
struct TargetSequence {
  std::vector<Mat3X> frames;
  TargetMeta meta;
};

// Fixed-density lattice on a cylinder's side surface (empty for planes).
Mat3X obstacle_surface_points(const Obstacle& ob, Real point_spacing = 0.01);

// Rolls out at the given parameters and samples every frame under the
// scenario's occlusion rule, with optional per-frame dropout and Gaussian
// noise. Cylinder surface points are appended to every frame. Deterministic
// in (spec, params, seed, augment).
TargetSequence generate_target(const ScenarioSpec& spec, Real w_stiff, Real w_mass,
                               std::uint64_t seed, const AugmentSpec& augment = {});

struct FrameLoss {
  int frame = -1;
  LossReport report;
  SampledCloud cloud;
};

struct LossBreakdown {
  Real total = 0;
  std::vector<FrameLoss> frames;
};

// Per-loss-frame unidirectional Chamfer of freshly sampled simulated clouds
// against the target frames. Per-frame sampling seed is mix_seed(sample_seed,
// frame).
LossBreakdown frame_losses(const TriMesh& mesh, const ScenarioSpec& spec, const Trajectory& traj,
                           const TargetSequence& target, std::uint64_t sample_seed);

// The training objective at arbitrary parameters: rollout + frame_losses with
// sample seed mix_seed(seed, 0). Identical seeds give identical losses.
Real evaluate_alignment(const ScenarioSpec& spec, Real w_stiff, Real w_mass,
                        const TargetSequence& target, std::uint64_t seed);

struct DatasetSpec {
  int train_count = 0;
  int test_count = 0;
  std::uint64_t seed = 0;
  AugmentSpec augment;
  ParamRange range;  // uniform parameter draws per example
};

}  // namespace clothfit
