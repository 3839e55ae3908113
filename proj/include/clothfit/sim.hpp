#pragma once

#include <array>
#include <vector>

#include "clothfit/mesh.hpp"
#include "clothfit/types.hpp"

namespace clothfit {

// Material constants plus the two recovered multipliers. Effective spring
// stiffness is w_stiff * base_stiffness[class]; effective vertex mass is
// w_mass * base_mass_per_vertex. Damping and contact constants are not scaled
// by the multipliers.
struct SimParams {
  Real w_stiff = 1;
  Real w_mass = 1;
  Real base_mass_per_vertex = 0;
  std::array<Real, kSpringClassCount> base_stiffness{};
  std::array<Real, kSpringClassCount> damping{};
  Vec3 gravity = Vec3::Zero();
  Real contact_stiffness = 0;
  Real contact_friction_scale = 0;

  Real vertex_mass() const { return w_mass * base_mass_per_vertex; }
  Real stiffness(SpringClass c) const { return w_stiff * base_stiffness[int(c)]; }
  Real damping_of(SpringClass c) const { return damping[int(c)]; }
};

void validate_params(const SimParams& params);

struct SimState {
  Mat3X positions;
  Mat3X velocities;
  int step_index = 0;
};

// Keyframed vertex: its position is overwritten each substep with the linear
// interpolation of per-frame waypoints (3 x (frames+1) columns), its velocity
// with the waypoint finite difference. No gradient flows through it.
struct AnchorTrack {
  int vertex = 0;
  Mat3X waypoints;
};

struct Obstacle {
  enum class Shape { Plane, Cylinder };
  Shape shape = Shape::Plane;
  Vec3 point = Vec3::Zero();       // plane point / cylinder axis center
  Vec3 direction = Vec3::UnitZ();  // plane normal / cylinder axis, unit length
  Real radius = 0;                 // cylinder only
  Real half_length = 0;            // cylinder only, along the axis either way
  bool frictional = true;          // apply tangential damping while penetrating
};

// Every substep state of one rollout: frames*substeps + 1 entries, so frame f
// lives at index f*substeps.
struct Trajectory {
  std::vector<SimState> states;
  int frames = 0;
  int substeps = 0;
  Real dt = 0;
  long zero_length_events = 0;  // springs skipped as numerically degenerate

  const SimState& frame_state(int frame) const {
    return states[static_cast<size_t>(frame) * static_cast<size_t>(substeps)];
  }
};

// Loss gradient with respect to the positions of one frame.
struct FrameAdjoint {
  int frame = 0;
  Mat3X d_positions;
};

struct ParamGrad {
  Real d_w_stiff = 0;
  Real d_w_mass = 0;
};

// Spring (Hooke + along-spring damping) forces; springs shorter than 1e-9 are
// skipped (zero-force subgradient), counted into *zero_length_events if given.
Mat3X internal_forces(const SimState& state, const TriMesh& mesh, const SimParams& params,
                      long* zero_length_events = nullptr);

// Penalty contact: stiffness * depth along the outward normal while
// penetrating, plus tangential velocity damping on frictional obstacles.
Mat3X contact_forces(const SimState& state, const std::vector<Obstacle>& obstacles,
                     const SimParams& params);

// One semi-implicit Euler substep: v' = v + dt (F/m + g), x' = x + dt v',
// then anchor overwrite at the new substep index.
SimState step(const SimState& state, const TriMesh& mesh, const SimParams& params,
              const std::vector<AnchorTrack>& anchors, const std::vector<Obstacle>& obstacles,
              Real dt, int substeps_per_frame, long* zero_length_events = nullptr);

// Integrates frames*substeps substeps from the mesh rest pose at zero
// velocity, storing every state. Throws SimDiverged on non-finite state.
Trajectory rollout(const TriMesh& mesh, const SimParams& params,
                   const std::vector<AnchorTrack>& anchors,
                   const std::vector<Obstacle>& obstacles, int frames, int substeps_per_frame,
                   Real dt);

// Reverse accumulation over every substep of the stored trajectory. Adjoints
// may only target frames in loss_frames; anchored coordinates are constants
// and contribute nothing. Returns d(loss)/d(w_stiff, w_mass).
ParamGrad rollout_grad(const TriMesh& mesh, const SimParams& params,
                       const std::vector<AnchorTrack>& anchors,
                       const std::vector<Obstacle>& obstacles, const Trajectory& traj,
                       const std::vector<FrameAdjoint>& loss_adjoint,
                       const std::vector<int>& loss_frames);

}  // namespace clothfit
