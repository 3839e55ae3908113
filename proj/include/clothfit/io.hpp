#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clothfit/estimator.hpp"
#include "clothfit/scenario.hpp"

namespace clothfit {

// Value of CLOTHFIT_OUT_ROOT, or the current directory when unset/empty.
// Relative --out paths resolve against it.
std::filesystem::path default_output_root();
std::filesystem::path resolve_output_dir(const std::string& out_arg);

// Point clouds as text, one "x y z" line per point, 9 significant digits.
void write_xyz(const std::filesystem::path& path, const Mat3X& points);
Mat3X read_xyz(const std::filesystem::path& path);

// Scenario configs are JSON with unit-annotated field names; unknown fields
// are rejected so typos fail loudly instead of silently applying defaults.
std::string scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const std::string& text);
void write_scenario_config(const std::filesystem::path& path, const ScenarioSpec& spec);
// Accepts a built-in scenario name or a path to a config file.
ScenarioSpec load_scenario(const std::string& name_or_path);

// Target-sequence directory: manifest.json plus frame_0000.xyz .. frame_TTTT.xyz.
void write_target(const std::filesystem::path& dir, const TargetSequence& target);
TargetSequence read_target(const std::filesystem::path& dir);

// results.json (full history, best parameters, termination reason) plus
// loss_curve.csv (iteration, loss, w_stiff, w_mass) for direct plotting.
void write_estimate_outputs(const std::filesystem::path& dir, const EstimateResult& result);

struct PhaseTiming {
  std::string name;
  double millis = 0;
};

// One per output directory; enough to replay the command exactly.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  ScenarioSpec scenario;
  std::uint64_t seed = 0;
  std::vector<PhaseTiming> phases;
};

void write_run_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

struct DatasetReport {
  int written = 0;
  int redraws = 0;
};

// Labeled target sequences under out_dir/train and out_dir/test with uniform
// parameter draws, plus labels.csv (id, split, w_stiff, w_mass, seed). An
// example whose rollout diverges is redrawn with a fresh seed, up to a cap.
DatasetReport generate_dataset(const ScenarioSpec& spec, const DatasetSpec& dspec,
                               const std::filesystem::path& out_dir);

// Debug export: one ASCII PLY per frame (frame_0000.ply ...).
void export_trajectory_ply(const std::filesystem::path& dir, const TriMesh& mesh,
                           const Trajectory& traj);

}  // namespace clothfit
