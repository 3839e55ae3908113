#include "clothfit/estimator.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace clothfit {
namespace {

Real sigmoid(Real s) {
  // Split on sign so exp never overflows.
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const Real e = std::exp(s);
  return e / (1.0 + e);
}

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

}  // namespace

std::pair<Real, Real> map_params(const LatentParams& latent, const ParamRange& range) {
  const Real width = range.hi - range.lo;
  return {sigmoid(latent.s_stiff) * width + range.lo, sigmoid(latent.s_mass) * width + range.lo};
}

Vec2 map_params_grad(const LatentParams& latent, const ParamRange& range, Real d_w_stiff,
                     Real d_w_mass) {
  const Real width = range.hi - range.lo;
  const Real gs = sigmoid(latent.s_stiff);
  const Real gm = sigmoid(latent.s_mass);
  return Vec2(d_w_stiff * gs * (1.0 - gs) * width, d_w_mass * gm * (1.0 - gm) * width);
}

Vec2 adam_step(AdamState& state, const Vec2& grad, Real lr, Real beta1, Real beta2, Real eps,
               int t) {
  if (t < 1) throw ValidationError("adam_step counter must start at 1");
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v.array() + (1.0 - beta2) * grad.array().square();
  const Vec2 m_hat = state.m / (1.0 - std::pow(beta1, t));
  const Vec2 v_hat = state.v / (1.0 - std::pow(beta2, t));
  return lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
}

const char* stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::Threshold: return "threshold";
    case StopReason::Budget: return "budget";
    case StopReason::Divergence: return "divergence";
  }
  return "unknown";
}

LossGrad pipeline_loss_grad(const TriMesh& mesh, const ScenarioSpec& spec, const SimParams& params,
                            const TargetSequence& target, std::uint64_t sample_seed) {
  const Trajectory traj = rollout(mesh, params, spec.anchors, spec.obstacles, spec.horizon_frames,
                                  spec.substeps_per_frame, spec.dt);
  LossBreakdown breakdown = frame_losses(mesh, spec, traj, target, sample_seed);

  LossGrad out;
  out.loss = breakdown.total;
  std::vector<FrameAdjoint> adjoints;
  adjoints.reserve(breakdown.frames.size());
  for (FrameLoss& fl : breakdown.frames) {
    const Mat3X point_grads =
        chamfer_point_gradients(fl.report, fl.cloud.points, target.frames[fl.frame]);
    adjoints.push_back({fl.frame, scatter_point_gradients(mesh, fl.cloud, point_grads)});
    out.provenance.push_back(std::move(fl.cloud.provenance));
  }
  out.grad_w = rollout_grad(mesh, params, spec.anchors, spec.obstacles, traj, adjoints,
                            spec.loss_frames);
  return out;
}

Real pipeline_loss(const TriMesh& mesh, const ScenarioSpec& spec, const SimParams& params,
                   const TargetSequence& target, std::uint64_t sample_seed,
                   const std::vector<std::vector<SampleCoords>>* frozen) {
  const Trajectory traj = rollout(mesh, params, spec.anchors, spec.obstacles, spec.horizon_frames,
                                  spec.substeps_per_frame, spec.dt);
  if (frozen == nullptr) return frame_losses(mesh, spec, traj, target, sample_seed).total;

  if (frozen->size() != spec.loss_frames.size())
    throw ValidationError("frozen provenance count does not match the loss frame list");
  Real total = 0;
  for (size_t i = 0; i < spec.loss_frames.size(); ++i) {
    const int f = spec.loss_frames[i];
    const SampledCloud cloud =
        sample_with_provenance(mesh, traj.frame_state(f).positions, (*frozen)[i]);
    total += unidirectional_chamfer(cloud.points, target.frames[f], f).value;
  }
  return total;
}

EstimateResult estimate(const ScenarioSpec& spec_in, const TargetSequence& target,
                        const OptimConfig& config, const IterationCallback& on_iteration) {
  ScenarioSpec spec = spec_in;
  if (!config.loss_frames.empty()) spec.loss_frames = config.loss_frames;
  validate_scenario(spec);
  if (config.max_iterations < 1) throw ValidationError("max_iterations must be positive");
  if (!(config.learning_rate > 0)) throw ValidationError("learning_rate must be positive");
  if (int(target.frames.size()) != spec.horizon_frames + 1)
    throw ValidationError("target frame count does not match the scenario horizon");

  const TriMesh mesh = build_mesh(spec);
  constexpr Real kInf = std::numeric_limits<Real>::infinity();

  EstimateResult result;
  result.best_loss = kInf;
  result.reason = StopReason::Budget;

  LatentParams latent;
  AdamState adam;
  int adam_calls = 0;
  // The step that produced the current latent point, for the half-step retry.
  LatentParams pre_step_latent;
  Vec2 last_delta = Vec2::Zero();
  bool have_last_step = false;
  bool retried_last_step = false;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const auto [w_stiff, w_mass] = map_params(latent, spec.param_range);
    IterationRecord rec;
    rec.iteration = iter;
    rec.latent = latent;
    rec.w_stiff = w_stiff;
    rec.w_mass = w_mass;

    const double t0 = now_ms();
    bool diverged = false;
    LossGrad eval;
    try {
      eval = pipeline_loss_grad(mesh, spec, make_params(spec, w_stiff, w_mass), target,
                                mix_seed(config.seed, std::uint64_t(iter)));
    } catch (const SimDiverged&) {
      diverged = true;
    }
    rec.millis = now_ms() - t0;

    if (diverged) {
      rec.loss = kInf;
      result.history.push_back(rec);
      if (on_iteration) on_iteration(rec);
      if (!have_last_step || retried_last_step) {
        result.reason = StopReason::Divergence;
        break;
      }
      // Retry the offending step at half magnitude from the same point; the
      // Adam moments keep the update they already received.
      latent.s_stiff = pre_step_latent.s_stiff - 0.5 * last_delta(0);
      latent.s_mass = pre_step_latent.s_mass - 0.5 * last_delta(1);
      retried_last_step = true;
      continue;
    }

    rec.loss = eval.loss;
    rec.grad_w = eval.grad_w;
    rec.grad_latent =
        map_params_grad(latent, spec.param_range, eval.grad_w.d_w_stiff, eval.grad_w.d_w_mass);
    result.history.push_back(rec);
    if (on_iteration) on_iteration(rec);

    if (!std::isfinite(rec.loss) || !rec.grad_latent.allFinite()) {
      result.reason = StopReason::Divergence;
      break;
    }
    if (rec.loss < result.best_loss) {
      result.best_loss = rec.loss;
      result.best_w_stiff = w_stiff;
      result.best_w_mass = w_mass;
      result.best_iteration = iter;
    }
    if (config.use_threshold && rec.loss < config.loss_threshold) {
      result.reason = StopReason::Threshold;
      break;
    }
    if (iter == config.max_iterations) break;  // budget; no point stepping again

    pre_step_latent = latent;
    last_delta = adam_step(adam, rec.grad_latent, config.learning_rate, config.beta1, config.beta2,
                           config.eps, ++adam_calls);
    latent.s_stiff -= last_delta(0);
    latent.s_mass -= last_delta(1);
    have_last_step = true;
    retried_last_step = false;
  }

  if (result.best_iteration == 0) {
    // Every iterate diverged; surface that instead of fabricating parameters.
    result.reason = StopReason::Divergence;
  }
  return result;
}

}  // namespace clothfit
