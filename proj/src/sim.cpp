#include "clothfit/sim.hpp"

#include <algorithm>
#include <cmath>

namespace clothfit {

namespace {

constexpr Real kDegenerateLength = 1e-9;

// Tangential contact damping fades in linearly over this depth so the force
// stays continuous at activation; past it the full scale applies.
constexpr Real kFrictionRampDepth = 1e-4;

inline Real friction_ramp(Real depth) { return std::min(depth / kFrictionRampDepth, Real(1)); }

inline Real friction_ramp_slope(Real depth) {
  return depth < kFrictionRampDepth ? Real(1) / kFrictionRampDepth : Real(0);
}

struct SpringEval {
  Vec3 unit = Vec3::Zero();
  Real len = 0;
  Real stretch = 0;  // len - rest_length
  Real reldot = 0;   // (v_b - v_a) . unit
  Real alpha = 0;    // scalar force along unit, applied +alpha*unit to a
  bool ok = false;
};

inline SpringEval eval_spring(const Vec3& xa, const Vec3& xb, const Vec3& va, const Vec3& vb,
                              Real k, Real c, Real rest_length) {
  SpringEval e;
  const Vec3 d = xb - xa;
  e.len = d.norm();
  if (e.len < kDegenerateLength) return e;
  e.ok = true;
  e.unit = d / e.len;
  e.stretch = e.len - rest_length;
  e.reldot = (vb - va).dot(e.unit);
  e.alpha = k * e.stretch + c * e.reldot;
  return e;
}

struct ContactEval {
  Vec3 normal = Vec3::Zero();
  Real depth = 0;      // penetration > 0 when active
  Real inv_rho = 0;    // cylinder: 1 / radial distance (normal curvature term)
  bool curved = false; // normal varies with position (cylinder side)
  bool ok = false;
};

inline ContactEval eval_contact(const Obstacle& ob, const Vec3& x) {
  ContactEval e;
  if (ob.shape == Obstacle::Shape::Plane) {
    const Real sd = ob.direction.dot(x - ob.point);
    if (sd >= 0) return e;
    e.ok = true;
    e.normal = ob.direction;
    e.depth = -sd;
    return e;
  }
  // Cylinder side: radial penalty within the capped span.
  const Vec3 q = x - ob.point;
  const Real t = q.dot(ob.direction);
  if (std::abs(t) > ob.half_length) return e;
  const Vec3 rho = q - t * ob.direction;
  const Real dist = rho.norm();
  if (dist >= ob.radius || dist < kDegenerateLength) return e;
  e.ok = true;
  e.normal = rho / dist;
  e.depth = ob.radius - dist;
  e.inv_rho = 1.0 / dist;
  e.curved = true;
  return e;
}

inline Vec3 contact_force_at(const ContactEval& e, const Obstacle& ob, const SimParams& params,
                             const Vec3& v) {
  Vec3 f = params.contact_stiffness * e.depth * e.normal;
  if (ob.frictional) {
    const Vec3 vt = v - v.dot(e.normal) * e.normal;
    f -= params.contact_friction_scale * friction_ramp(e.depth) * vt;
  }
  return f;
}

long accumulate_spring_forces(const SimState& state, const TriMesh& mesh,
                              const SimParams& params, Mat3X& force) {
  long degenerate = 0;
  for (const RestEdge& edge : mesh.rest_edges) {
    const SpringEval e =
        eval_spring(state.positions.col(edge.a), state.positions.col(edge.b),
                    state.velocities.col(edge.a), state.velocities.col(edge.b),
                    params.stiffness(edge.cls), params.damping_of(edge.cls), edge.rest_length);
    if (!e.ok) {
      ++degenerate;
      continue;
    }
    const Vec3 f = e.alpha * e.unit;
    force.col(edge.a) += f;
    force.col(edge.b) -= f;
  }
  return degenerate;
}

void accumulate_contact_forces(const SimState& state, const std::vector<Obstacle>& obstacles,
                               const SimParams& params, Mat3X& force) {
  for (const Obstacle& ob : obstacles) {
    for (Eigen::Index v = 0; v < state.positions.cols(); ++v) {
      const ContactEval e = eval_contact(ob, state.positions.col(v));
      if (!e.ok) continue;
      force.col(v) += contact_force_at(e, ob, params, state.velocities.col(v));
    }
  }
}

void apply_anchors(Mat3X& positions, Mat3X& velocities,
                   const std::vector<AnchorTrack>& anchors, int step_index, Real dt,
                   int substeps_per_frame) {
  if (step_index <= 0) return;
  const int frame = (step_index - 1) / substeps_per_frame;
  const Real frac = Real(step_index - frame * substeps_per_frame) / Real(substeps_per_frame);
  const Real frame_dt = dt * substeps_per_frame;
  for (const AnchorTrack& a : anchors) {
    if (a.vertex < 0 || a.vertex >= positions.cols())
      throw ValidationError("anchor vertex index out of range");
    if (a.waypoints.cols() < frame + 2)
      throw ValidationError("anchor track has too few waypoints for this step");
    const Vec3 w0 = a.waypoints.col(frame);
    const Vec3 w1 = a.waypoints.col(frame + 1);
    positions.col(a.vertex) = w0 + frac * (w1 - w0);
    velocities.col(a.vertex) = (w1 - w0) / frame_dt;
  }
}

}  // namespace

void validate_params(const SimParams& params) {
  if (!(params.w_stiff > 0) || !(params.w_mass > 0))
    throw ValidationError("parameter multipliers must be positive");
  if (!(params.base_mass_per_vertex > 0))
    throw ValidationError("base mass per vertex must be positive");
  for (int c = 0; c < kSpringClassCount; ++c)
    if (params.base_stiffness[c] < 0 || params.damping[c] < 0)
      throw ValidationError("stiffness and damping must be non-negative");
  if (params.contact_stiffness < 0 || params.contact_friction_scale < 0)
    throw ValidationError("contact constants must be non-negative");
  if (!params.gravity.allFinite()) throw ValidationError("gravity must be finite");
}

Mat3X internal_forces(const SimState& state, const TriMesh& mesh, const SimParams& params,
                      long* zero_length_events) {
  Mat3X force = Mat3X::Zero(3, state.positions.cols());
  const long degenerate = accumulate_spring_forces(state, mesh, params, force);
  if (zero_length_events) *zero_length_events += degenerate;
  return force;
}

Mat3X contact_forces(const SimState& state, const std::vector<Obstacle>& obstacles,
                     const SimParams& params) {
  Mat3X force = Mat3X::Zero(3, state.positions.cols());
  accumulate_contact_forces(state, obstacles, params, force);
  return force;
}

SimState step(const SimState& state, const TriMesh& mesh, const SimParams& params,
              const std::vector<AnchorTrack>& anchors, const std::vector<Obstacle>& obstacles,
              Real dt, int substeps_per_frame, long* zero_length_events) {
  if (state.positions.cols() != mesh.vertices.cols())
    throw ValidationError("step: state size does not match mesh");
  if (!(dt > 0) || substeps_per_frame < 1)
    throw ValidationError("step: dt must be positive and substeps >= 1");
  const Real m = params.vertex_mass();
  if (!(m > 0)) throw ValidationError("step: vertex mass must be positive");

  Mat3X force = Mat3X::Zero(3, state.positions.cols());
  const long degenerate = accumulate_spring_forces(state, mesh, params, force);
  if (zero_length_events) *zero_length_events += degenerate;
  accumulate_contact_forces(state, obstacles, params, force);

  SimState out;
  out.step_index = state.step_index + 1;
  out.velocities = state.velocities + (dt / m) * force;
  out.velocities.colwise() += dt * params.gravity;
  out.positions = state.positions + dt * out.velocities;
  apply_anchors(out.positions, out.velocities, anchors, out.step_index, dt, substeps_per_frame);
  return out;
}

Trajectory rollout(const TriMesh& mesh, const SimParams& params,
                   const std::vector<AnchorTrack>& anchors,
                   const std::vector<Obstacle>& obstacles, int frames, int substeps_per_frame,
                   Real dt) {
  if (frames < 0) throw ValidationError("rollout: frames must be non-negative");
  validate_params(params);

  Trajectory traj;
  traj.frames = frames;
  traj.substeps = substeps_per_frame;
  traj.dt = dt;

  SimState init;
  init.positions = mesh.vertices;
  init.velocities = Mat3X::Zero(3, mesh.vertex_count());
  init.step_index = 0;

  const int total = frames * substeps_per_frame;
  traj.states.reserve(static_cast<size_t>(total) + 1);
  traj.states.push_back(std::move(init));
  for (int s = 1; s <= total; ++s) {
    SimState next = step(traj.states.back(), mesh, params, anchors, obstacles, dt,
                         substeps_per_frame, &traj.zero_length_events);
    if (!next.positions.allFinite() || !next.velocities.allFinite())
      throw SimDiverged(s, params.w_stiff, params.w_mass);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

ParamGrad rollout_grad(const TriMesh& mesh, const SimParams& params,
                       const std::vector<AnchorTrack>& anchors,
                       const std::vector<Obstacle>& obstacles, const Trajectory& traj,
                       const std::vector<FrameAdjoint>& loss_adjoint,
                       const std::vector<int>& loss_frames) {
  const Eigen::Index nv = mesh.vertices.cols();
  const size_t total = traj.states.size();
  if (total != static_cast<size_t>(traj.frames) * traj.substeps + 1)
    throw ValidationError("rollout_grad: trajectory state count is inconsistent");

  std::vector<const Mat3X*> inject(total, nullptr);
  for (const FrameAdjoint& adj : loss_adjoint) {
    if (std::find(loss_frames.begin(), loss_frames.end(), adj.frame) == loss_frames.end())
      throw ValidationError("rollout_grad: adjoint frame not in scenario loss frames");
    if (adj.frame < 0 || adj.frame > traj.frames)
      throw ValidationError("rollout_grad: adjoint frame out of trajectory range");
    if (adj.d_positions.cols() != nv)
      throw ValidationError("rollout_grad: adjoint size does not match mesh");
    inject[static_cast<size_t>(adj.frame) * traj.substeps] = &adj.d_positions;
  }

  std::vector<char> anchored(nv, 0);
  for (const AnchorTrack& a : anchors) anchored[a.vertex] = 1;

  const Real m = params.vertex_mass();
  const Real dt = traj.dt;
  const Real force_scale = dt / m;  // per-vertex force adjoint = force_scale * vtot

  Mat3X xbar = Mat3X::Zero(3, nv);
  Mat3X vbar = Mat3X::Zero(3, nv);
  Mat3X vtot(3, nv);
  Real g_stiff = 0;
  Real g_mass = 0;

  for (size_t s = total - 1; s >= 1; --s) {
    if (inject[s]) xbar += *inject[s];
    for (Eigen::Index v = 0; v < nv; ++v) {
      if (anchored[v]) {
        xbar.col(v).setZero();
        vbar.col(v).setZero();
      }
    }
    const SimState& prev = traj.states[s - 1];

    // x_s = x_{s-1} + dt v_s and v_s = v_{s-1} + dt (F/m + g): the adjoint of
    // v_s collects vbar plus dt*xbar; xbar itself carries over unchanged.
    vtot.noalias() = vbar + dt * xbar;
    vbar = vtot;

    // Force VJP. dot_fa accumulates F . vtot for the mass path:
    // d(accel)/d(w_mass) = -F * base_mass / m^2.
    Real dot_fa = 0;

    for (const RestEdge& edge : mesh.rest_edges) {
      const Real k = params.stiffness(edge.cls);
      const Real c = params.damping_of(edge.cls);
      const SpringEval e =
          eval_spring(prev.positions.col(edge.a), prev.positions.col(edge.b),
                      prev.velocities.col(edge.a), prev.velocities.col(edge.b), k, c,
                      edge.rest_length);
      if (!e.ok) continue;

      const Vec3 pair_a = vtot.col(edge.a) - vtot.col(edge.b);
      dot_fa += e.alpha * e.unit.dot(pair_a);

      const Vec3 fbar = force_scale * pair_a;  // adjoint of the +f on vertex a
      const Real beta = e.unit.dot(fbar);
      g_stiff += params.base_stiffness[int(edge.cls)] * e.stretch * beta;

      const Vec3 relvbar = c * beta * e.unit;
      vbar.col(edge.b) += relvbar;
      vbar.col(edge.a) -= relvbar;

      const Vec3 relv = prev.velocities.col(edge.b) - prev.velocities.col(edge.a);
      const Vec3 dbar = k * beta * e.unit + (beta * c / e.len) * (relv - e.reldot * e.unit) +
                        (e.alpha / e.len) * (fbar - beta * e.unit);
      xbar.col(edge.b) += dbar;
      xbar.col(edge.a) -= dbar;
    }

    for (const Obstacle& ob : obstacles) {
      for (Eigen::Index v = 0; v < nv; ++v) {
        const ContactEval e = eval_contact(ob, prev.positions.col(v));
        if (!e.ok) continue;
        const Vec3 vel = prev.velocities.col(v);
        dot_fa += contact_force_at(e, ob, params, vel).dot(vtot.col(v));

        const Vec3 fbar = force_scale * vtot.col(v);
        const Real fn = e.normal.dot(fbar);
        const Real ramp = friction_ramp(e.depth);
        Real depth_bar = params.contact_stiffness * fn;
        if (ob.frictional) {
          const Real vt_dot_fbar = vel.dot(fbar) - vel.dot(e.normal) * fn;
          depth_bar -= params.contact_friction_scale * friction_ramp_slope(e.depth) * vt_dot_fbar;
          vbar.col(v) -= params.contact_friction_scale * ramp * (fbar - fn * e.normal);
        }
        // depth gradient is -normal for both shapes
        Vec3 xadd = -depth_bar * e.normal;
        if (e.curved) {
          // normal varies: nbar collects the penalty and friction terms, then
          // maps through dn/dx = (P - n n^T)/rho with P = I - axis axis^T.
          Vec3 nbar = params.contact_stiffness * e.depth * fbar;
          if (ob.frictional)
            nbar += params.contact_friction_scale * ramp * (fn * vel + vel.dot(e.normal) * fbar);
          const Vec3 p_nbar = nbar - ob.direction.dot(nbar) * ob.direction;
          xadd += e.inv_rho * (p_nbar - e.normal.dot(nbar) * e.normal);
        }
        xbar.col(v) += xadd;
      }
    }

    g_mass += -(params.base_mass_per_vertex / (m * m)) * dt * dot_fa;
  }

  return ParamGrad{g_stiff, g_mass};
}

}  // namespace clothfit
