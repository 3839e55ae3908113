#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "clothfit/scenario.hpp"
#include "clothfit/types.hpp"

namespace clothfit {

// Unconstrained optimization variables; mapped into the parameter box by a
// scaled sigmoid, so every latent point is feasible.
struct LatentParams {
  Real s_stiff = 0;
  Real s_mass = 0;
};

// w = sigmoid(s) * (hi - lo) + lo; s = 0 sits at the box midpoint.
std::pair<Real, Real> map_params(const LatentParams& latent, const ParamRange& range);
// Chain rule through the mapping: dL/ds_i = dL/dw_i * sigmoid'(s_i) * (hi - lo).
Vec2 map_params_grad(const LatentParams& latent, const ParamRange& range, Real d_w_stiff,
                     Real d_w_mass);

struct AdamState {
  Vec2 m = Vec2::Zero();
  Vec2 v = Vec2::Zero();
};

// One bias-corrected Adam update; t counts calls starting at 1. Returns the
// step to subtract from the latent point.
Vec2 adam_step(AdamState& state, const Vec2& grad, Real lr, Real beta1, Real beta2, Real eps,
               int t);

struct OptimConfig {
  Real learning_rate = 0.2;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
  int max_iterations = 50;
  bool use_threshold = true;
  Real loss_threshold = 5e-4;
  std::uint64_t seed = 0;
  std::vector<int> loss_frames;  // empty: use the scenario's list
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  LatentParams latent;
  Real w_stiff = 0;
  Real w_mass = 0;
  Real loss = 0;  // +inf when the rollout diverged at this iterate
  ParamGrad grad_w;
  Vec2 grad_latent = Vec2::Zero();
  Real millis = 0;
};

enum class StopReason { Threshold, Budget, Divergence };
const char* stop_reason_name(StopReason reason);

struct EstimateResult {
  Real best_w_stiff = 0;
  Real best_w_mass = 0;
  Real best_loss = 0;
  int best_iteration = 0;  // reproduce its loss with sample seed mix_seed(seed, iteration)
  StopReason reason = StopReason::Budget;
  std::vector<IterationRecord> history;
};

struct LossGrad {
  Real loss = 0;
  ParamGrad grad_w;
  // One provenance list per loss frame, in spec.loss_frames order.
  std::vector<std::vector<SampleCoords>> provenance;
};

// One forward + adjoint evaluation of the alignment objective at fixed
// parameters. Per-frame sampling seed is mix_seed(sample_seed, frame).
LossGrad pipeline_loss_grad(const TriMesh& mesh, const ScenarioSpec& spec, const SimParams& params,
                            const TargetSequence& target, std::uint64_t sample_seed);

// Loss only. With `frozen` set, the stored draws are re-evaluated instead of
// sampling fresh ones, which makes finite differences of this function
// well-posed.
Real pipeline_loss(const TriMesh& mesh, const ScenarioSpec& spec, const SimParams& params,
                   const TargetSequence& target, std::uint64_t sample_seed,
                   const std::vector<std::vector<SampleCoords>>* frozen = nullptr);

using IterationCallback = std::function<void(const IterationRecord&)>;

// Adam on the latent parameters against the target sequence. Stops on the loss
// threshold, the iteration budget, or divergence. A diverged iterate is
// recorded with infinite loss and the step that led to it is retried once at
// half magnitude; a second consecutive divergence terminates the run. Returns
// the lowest-loss iterate seen.
EstimateResult estimate(const ScenarioSpec& spec, const TargetSequence& target,
                        const OptimConfig& config, const IterationCallback& on_iteration = {});

}  // namespace clothfit
