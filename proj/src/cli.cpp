#include "clothfit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <iostream>

#include "clothfit/estimator.hpp"
#include "clothfit/io.hpp"
#include "clothfit/scenario.hpp"

namespace clothfit {
namespace {

using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

std::pair<Real, Real> parse_param_pair(const std::string& s) {
  const size_t comma = s.find(',');
  if (comma == std::string::npos)
    throw ValidationError("--params expects W_STIFF,W_MASS (e.g. 0.5,8.0)");
  const auto parse_one = [&](const std::string& part) {
    size_t used = 0;
    Real v = 0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw ValidationError("--params: '" + part + "' is not a number");
    }
    while (used < part.size() && std::isspace(static_cast<unsigned char>(part[used]))) ++used;
    if (used != part.size() || !std::isfinite(v))
      throw ValidationError("--params: '" + part + "' is not a number");
    return v;
  };
  return {parse_one(s.substr(0, comma)), parse_one(s.substr(comma + 1))};
}

void cmd_gen_target(const std::vector<std::string>& raw_args, const std::string& scenario_arg,
                    const std::string& params_arg, std::uint64_t seed, Real noise, Real dropout,
                    const std::string& out_arg) {
  const auto t_load = clock_type::now();
  const ScenarioSpec spec = load_scenario(scenario_arg);
  const auto [w_stiff, w_mass] = parse_param_pair(params_arg);
  AugmentSpec augment;
  augment.noise_sigma = noise;
  augment.drop_fraction = dropout;
  const double load_ms = ms_since(t_load);

  const auto t_gen = clock_type::now();
  const TargetSequence target = generate_target(spec, w_stiff, w_mass, seed, augment);
  const double gen_ms = ms_since(t_gen);

  const auto t_write = clock_type::now();
  const std::filesystem::path out = resolve_output_dir(out_arg);
  write_target(out, target);
  RunManifest manifest;
  manifest.command = "gen-target";
  manifest.arguments = raw_args;
  manifest.scenario = spec;
  manifest.seed = seed;
  manifest.phases = {{"load", load_ms}, {"generate", gen_ms}, {"write", ms_since(t_write)}};
  write_run_manifest(out, manifest);
  std::cout << "wrote " << target.frames.size() << " frames to " << out.string() << "\n";
}

int cmd_estimate(const std::vector<std::string>& raw_args, const std::string& scenario_arg,
                 const std::string& target_arg, const OptimConfig& config, bool lr_given,
                 const std::string& out_arg) {
  const auto t_load = clock_type::now();
  ScenarioSpec spec = load_scenario(scenario_arg);
  OptimConfig cfg = config;
  if (!lr_given) cfg.learning_rate = spec.name == "band_stretch" ? 0.4 : 0.2;
  const TargetSequence target = read_target(target_arg);
  const double load_ms = ms_since(t_load);

  const auto t_opt = clock_type::now();
  const EstimateResult result = estimate(spec, target, cfg, [](const IterationRecord& r) {
    std::printf("iter %3d  loss %-13.6e  w_stiff %-8.5g  w_mass %-8.5g\n", r.iteration, r.loss,
                r.w_stiff, r.w_mass);
    std::fflush(stdout);
  });
  const double opt_ms = ms_since(t_opt);

  const auto t_write = clock_type::now();
  const std::filesystem::path out = resolve_output_dir(out_arg);
  write_estimate_outputs(out, result);
  RunManifest manifest;
  manifest.command = "estimate";
  manifest.arguments = raw_args;
  manifest.scenario = spec;
  manifest.seed = cfg.seed;
  manifest.phases = {{"load", load_ms}, {"optimize", opt_ms}, {"write", ms_since(t_write)}};
  write_run_manifest(out, manifest);

  if (result.best_iteration == 0) {
    std::cerr << "estimate: every iterate diverged; results record the attempts\n";
    return 2;
  }
  std::printf("best: iteration %d  loss %.6e  w_stiff %.6g  w_mass %.6g  (%s)\n",
              result.best_iteration, result.best_loss, result.best_w_stiff, result.best_w_mass,
              stop_reason_name(result.reason));
  return 0;
}

void cmd_evaluate(const std::string& scenario_arg, const std::string& target_arg,
                  const std::string& params_arg, std::uint64_t seed) {
  const ScenarioSpec spec = load_scenario(scenario_arg);
  const TargetSequence target = read_target(target_arg);
  const auto [w_stiff, w_mass] = parse_param_pair(params_arg);
  const Real loss = evaluate_alignment(spec, w_stiff, w_mass, target, seed);
  std::printf("%.17g\n", loss);
}

int cmd_gradcheck(const std::string& scenario_arg, int resolution, int horizon, Real tolerance,
                  int draws, std::uint64_t seed) {
  if (resolution < 2 || resolution > 5)
    throw ValidationError("--resolution must be within [2, 5]");
  if (horizon < 2 || horizon > 15) throw ValidationError("--horizon must be within [2, 15]");
  if (!(tolerance > 0)) throw ValidationError("--tolerance must be positive");
  if (draws < 1) throw ValidationError("--draws must be at least 1");

  ScenarioSpec spec;
  if (is_builtin_scenario(scenario_arg)) {
    spec = make_scenario_sized(scenario_arg, resolution, horizon);
  } else {
    spec = load_scenario(scenario_arg);
    if (spec.grid.nx > 5 || spec.grid.ny > 5 || spec.horizon_frames > 15)
      throw ValidationError("gradcheck needs a small instance (grid <= 5x5, horizon <= 15)");
  }
  const TriMesh mesh = build_mesh(spec);
  // A target at off-center parameters keeps the loss and its gradient well
  // away from the sampling noise floor at every draw.
  const TargetSequence target = generate_target(spec, 0.4, 6.0, mix_seed(seed, 0xA));

  Rng rng(mix_seed(seed, 0xB));
  bool all_ok = true;
  for (int d = 1; d <= draws; ++d) {
    LatentParams latent;
    latent.s_stiff = rng.uniform(-2.0, 2.0);
    latent.s_mass = rng.uniform(-2.0, 2.0);
    const auto [w_stiff, w_mass] = map_params(latent, spec.param_range);
    const std::uint64_t sample_seed = mix_seed(seed, std::uint64_t(d));
    const LossGrad base = pipeline_loss_grad(mesh, spec, make_params(spec, w_stiff, w_mass),
                                             target, sample_seed);
    const Vec2 analytic = map_params_grad(latent, spec.param_range, base.grad_w.d_w_stiff,
                                          base.grad_w.d_w_mass);

    // The loss is piecewise smooth (contact activation), so a single step can
    // straddle a kink; keep the ladder step whose quotient agrees best. A
    // wrong analytic value fails at every step since the quotients converge.
    Vec2 fd;
    for (int c = 0; c < 2; ++c) {
      const Real s = c == 0 ? latent.s_stiff : latent.s_mass;
      const auto loss_at = [&](Real shifted) {
        LatentParams probe = latent;
        (c == 0 ? probe.s_stiff : probe.s_mass) = shifted;
        const auto [ws, wm] = map_params(probe, spec.param_range);
        return pipeline_loss(mesh, spec, make_params(spec, ws, wm), target, sample_seed,
                             &base.provenance);
      };
      Real best = std::numeric_limits<Real>::infinity();
      for (const Real scale : {1e-6, 3e-7, 1e-7, 3e-8, 1e-8}) {
        const Real h = scale * std::max(Real(1), std::abs(s));
        const Real quotient = (loss_at(s + h) - loss_at(s - h)) / (2 * h);
        if (std::abs(quotient - analytic(c)) < std::abs(best - analytic(c))) best = quotient;
      }
      fd(c) = best;
    }

    Vec2 rel;
    for (int c = 0; c < 2; ++c)
      rel(c) = std::abs(analytic(c) - fd(c)) /
               std::max({std::abs(analytic(c)), std::abs(fd(c)), Real(1e-12)});
    const bool ok = rel(0) <= tolerance && rel(1) <= tolerance;
    all_ok = all_ok && ok;
    std::printf("draw %d  w=(%.4g, %.4g)\n", d, w_stiff, w_mass);
    std::printf("  dL/ds analytic (%.10e, %.10e)\n", analytic(0), analytic(1));
    std::printf("  dL/ds central  (%.10e, %.10e)\n", fd(0), fd(1));
    std::printf("  rel err        (%.3e, %.3e)  %s\n", rel(0), rel(1), ok ? "ok" : "MISMATCH");
  }
  std::printf(all_ok ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return all_ok ? 0 : 1;
}

void cmd_gen_dataset(const std::vector<std::string>& raw_args, const std::string& scenario_arg,
                     int train, int test, std::uint64_t seed, Real noise, Real dropout,
                     const std::string& out_arg) {
  const auto t_load = clock_type::now();
  const ScenarioSpec spec = load_scenario(scenario_arg);
  DatasetSpec dspec;
  dspec.train_count = train;
  dspec.test_count = test;
  dspec.seed = seed;
  dspec.augment.noise_sigma = noise;
  dspec.augment.drop_fraction = dropout;
  dspec.range = spec.param_range;
  const double load_ms = ms_since(t_load);

  const auto t_gen = clock_type::now();
  const std::filesystem::path out = resolve_output_dir(out_arg);
  const DatasetReport report = generate_dataset(spec, dspec, out);
  RunManifest manifest;
  manifest.command = "gen-dataset";
  manifest.arguments = raw_args;
  manifest.scenario = spec;
  manifest.seed = seed;
  manifest.phases = {{"load", load_ms}, {"generate", ms_since(t_gen)}};
  write_run_manifest(out, manifest);
  std::cout << "wrote " << report.written << " examples (" << report.redraws << " redraws) to "
            << out.string() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Fits cloth material multipliers (stiffness, mass) to observed point-cloud "
               "sequences with a differentiable mass-spring simulator"};
  app.require_subcommand(1);
  int exit_override = 0;

  // gen-target
  auto* gen = app.add_subcommand("gen-target", "Simulate a scenario and write a target "
                                               "point-cloud sequence");
  std::string gen_scenario, gen_params, gen_out;
  std::uint64_t gen_seed = 0;
  Real gen_noise = 0, gen_dropout = 0;
  gen->add_option("scenario", gen_scenario, "Built-in scenario name or config path")->required();
  gen->add_option("--params", gen_params, "True multipliers as W_STIFF,W_MASS")->required();
  gen->add_option("--seed", gen_seed, "Sampling seed");
  gen->add_option("--noise", gen_noise, "Gaussian noise sigma in meters");
  gen->add_option("--dropout", gen_dropout, "Per-face dropout probability");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->callback([&] { cmd_gen_target(args, gen_scenario, gen_params, gen_seed, gen_noise,
                                     gen_dropout, gen_out); });

  // estimate
  auto* est = app.add_subcommand("estimate", "Recover multipliers from a target sequence");
  std::string est_scenario, est_target, est_out;
  OptimConfig est_cfg;
  est->add_option("scenario", est_scenario, "Built-in scenario name or config path")->required();
  est->add_option("target", est_target, "Target sequence directory")->required();
  auto* lr_opt = est->add_option("--lr", est_cfg.learning_rate,
                                 "Adam learning rate (default 0.2; band_stretch 0.4)");
  est->add_option("--iters", est_cfg.max_iterations, "Iteration budget");
  est->add_option("--threshold", est_cfg.loss_threshold, "Stop when the loss falls below this");
  est->add_flag("--no-threshold{false}", est_cfg.use_threshold,
                "Disable the loss-threshold stop");
  est->add_option("--seed", est_cfg.seed, "Run seed for per-iteration sampling");
  est->add_option("--out", est_out, "Output directory")->required();
  est->callback([&] {
    exit_override = cmd_estimate(args, est_scenario, est_target, est_cfg, lr_opt->count() > 0,
                                 est_out);
  });

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Print the alignment loss at given multipliers");
  std::string ev_scenario, ev_target, ev_params;
  std::uint64_t ev_seed = 0;
  ev->add_option("scenario", ev_scenario, "Built-in scenario name or config path")->required();
  ev->add_option("target", ev_target, "Target sequence directory")->required();
  ev->add_option("--params", ev_params, "Multipliers as W_STIFF,W_MASS")->required();
  ev->add_option("--seed", ev_seed, "Sampling seed");
  ev->callback([&] { cmd_evaluate(ev_scenario, ev_target, ev_params, ev_seed); });

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Check analytic parameter gradients against "
                                             "central finite differences on a small instance");
  std::string gc_scenario;
  int gc_resolution = 3, gc_horizon = 10, gc_draws = 5;
  Real gc_tolerance = 1e-3;
  std::uint64_t gc_seed = 0;
  gc->add_option("scenario", gc_scenario, "Built-in scenario name or config path")->required();
  gc->add_option("--resolution", gc_resolution, "Grid resolution (2..5)");
  gc->add_option("--horizon", gc_horizon, "Frames (2..15)");
  gc->add_option("--tolerance", gc_tolerance, "Relative error tolerance");
  gc->add_option("--draws", gc_draws, "Random parameter draws to test");
  gc->add_option("--seed", gc_seed, "Draw seed");
  gc->callback([&] {
    exit_override =
        cmd_gradcheck(gc_scenario, gc_resolution, gc_horizon, gc_tolerance, gc_draws, gc_seed);
  });

  // gen-dataset
  auto* ds = app.add_subcommand("gen-dataset", "Write labeled train/test target sequences");
  std::string ds_scenario, ds_out;
  int ds_train = 0, ds_test = 0;
  std::uint64_t ds_seed = 0;
  Real ds_noise = 0, ds_dropout = 0;
  ds->add_option("scenario", ds_scenario, "Built-in scenario name or config path")->required();
  ds->add_option("--train", ds_train, "Training example count")->required();
  ds->add_option("--test", ds_test, "Test example count")->required();
  ds->add_option("--seed", ds_seed, "Dataset seed");
  ds->add_option("--noise", ds_noise, "Gaussian noise sigma in meters");
  ds->add_option("--dropout", ds_dropout, "Per-face dropout probability");
  ds->add_option("--out", ds_out, "Output directory")->required();
  ds->callback([&] {
    cmd_gen_dataset(args, ds_scenario, ds_train, ds_test, ds_seed, ds_noise, ds_dropout, ds_out);
  });

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("clothfit");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SimDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_override;
}

}  // namespace clothfit
