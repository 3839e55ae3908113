#include "clothfit/io.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

namespace clothfit {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_g9(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string format_g17(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string frame_file(int frame, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.%s", frame, ext);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return out.str();
}

void spill(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out.good()) throw IoError("write failed: " + path.string());
}

// --- strict JSON helpers ---------------------------------------------------

json parse_json(const std::string& text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError(where + ": malformed JSON");
  return j;
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(where + ": missing field '" + key + "'");
  return *it;
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (std::string_view k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ValidationError(where + ": unknown field '" + it.key() + "'");
  }
}

Real num(const json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  return j.get<Real>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return j.get<int>();
}

std::uint64_t u64(const json& j, const std::string& where) {
  if (!(j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0)))
    throw ValidationError(where + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ValidationError(where + ": expected a boolean");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where + ": expected a string");
  return j.get<std::string>();
}

Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(where + ": expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v(i) = num(j[i], where);
  return v;
}

json to_array(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json num_or_null(Real v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

// --- scenario config schema ------------------------------------------------

json material_to_json(const SimParams& m) {
  return json{{"base_mass_per_vertex_kg", m.base_mass_per_vertex},
              {"base_stiffness_n_per_m",
               json::array({m.base_stiffness[0], m.base_stiffness[1], m.base_stiffness[2]})},
              {"damping_n_s_per_m", json::array({m.damping[0], m.damping[1], m.damping[2]})},
              {"gravity_m_per_s2", to_array(m.gravity)},
              {"contact_stiffness_n_per_m", m.contact_stiffness},
              {"contact_friction_n_s_per_m", m.contact_friction_scale}};
}

SimParams material_from_json(const json& j, const std::string& where) {
  reject_unknown(j,
                 {"base_mass_per_vertex_kg", "base_stiffness_n_per_m", "damping_n_s_per_m",
                  "gravity_m_per_s2", "contact_stiffness_n_per_m", "contact_friction_n_s_per_m"},
                 where);
  SimParams m;
  m.base_mass_per_vertex = num(need(j, "base_mass_per_vertex_kg", where), where);
  const json& ks = need(j, "base_stiffness_n_per_m", where);
  const json& cs = need(j, "damping_n_s_per_m", where);
  if (!ks.is_array() || ks.size() != kSpringClassCount)
    throw ValidationError(where + ": base_stiffness_n_per_m needs [structural, shear, bend]");
  if (!cs.is_array() || cs.size() != kSpringClassCount)
    throw ValidationError(where + ": damping_n_s_per_m needs [structural, shear, bend]");
  for (int i = 0; i < kSpringClassCount; ++i) {
    m.base_stiffness[i] = num(ks[i], where);
    m.damping[i] = num(cs[i], where);
  }
  m.gravity = vec3(need(j, "gravity_m_per_s2", where), where);
  m.contact_stiffness = num(need(j, "contact_stiffness_n_per_m", where), where);
  m.contact_friction_scale = num(need(j, "contact_friction_n_s_per_m", where), where);
  return m;
}

const char* occlusion_kind_name(OcclusionRule::Kind k) {
  switch (k) {
    case OcclusionRule::Kind::All: return "all";
    case OcclusionRule::Kind::UpperHalf: return "upper_half";
    case OcclusionRule::Kind::Faces: return "faces";
    case OcclusionRule::Kind::RandomDrop: return "random_drop";
  }
  return "all";
}

json occlusion_to_json(const OcclusionRule& rule) {
  json j{{"kind", occlusion_kind_name(rule.kind)}};
  switch (rule.kind) {
    case OcclusionRule::Kind::All: break;
    case OcclusionRule::Kind::UpperHalf:
      j["axis"] = rule.axis;
      j["side"] = rule.side;
      break;
    case OcclusionRule::Kind::Faces: j["faces"] = rule.faces; break;
    case OcclusionRule::Kind::RandomDrop:
      j["fraction"] = rule.fraction;
      j["seed"] = rule.seed;
      break;
  }
  return j;
}

OcclusionRule occlusion_from_json(const json& j, const std::string& where) {
  OcclusionRule rule;
  const std::string kind = text(need(j, "kind", where), where);
  if (kind == "all") {
    reject_unknown(j, {"kind"}, where);
    rule.kind = OcclusionRule::Kind::All;
  } else if (kind == "upper_half") {
    reject_unknown(j, {"kind", "axis", "side"}, where);
    rule.kind = OcclusionRule::Kind::UpperHalf;
    rule.axis = integer(need(j, "axis", where), where);
    rule.side = integer(need(j, "side", where), where);
  } else if (kind == "faces") {
    reject_unknown(j, {"kind", "faces"}, where);
    rule.kind = OcclusionRule::Kind::Faces;
    const json& arr = need(j, "faces", where);
    if (!arr.is_array()) throw ValidationError(where + ": faces must be an array");
    for (const json& f : arr) rule.faces.push_back(integer(f, where));
  } else if (kind == "random_drop") {
    reject_unknown(j, {"kind", "fraction", "seed"}, where);
    rule.kind = OcclusionRule::Kind::RandomDrop;
    rule.fraction = num(need(j, "fraction", where), where);
    rule.seed = u64(need(j, "seed", where), where);
  } else {
    throw ValidationError(where + ": unknown occlusion kind '" + kind + "'");
  }
  return rule;
}

json scenario_to_json_obj(const ScenarioSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["grid"] = json{{"nx", spec.grid.nx},
                   {"ny", spec.grid.ny},
                   {"spacing_m", spec.grid.spacing},
                   {"origin_m", to_array(spec.grid.origin)},
                   {"axis_u", to_array(spec.grid.axis_u)},
                   {"axis_v", to_array(spec.grid.axis_v)}};
  j["material"] = material_to_json(spec.material);
  json anchors = json::array();
  for (const AnchorTrack& a : spec.anchors) {
    json way = json::array();
    for (Eigen::Index f = 0; f < a.waypoints.cols(); ++f)
      way.push_back(to_array(a.waypoints.col(f)));
    anchors.push_back(json{{"vertex", a.vertex}, {"waypoints_m", std::move(way)}});
  }
  j["anchors"] = std::move(anchors);
  json obstacles = json::array();
  for (const Obstacle& ob : spec.obstacles) {
    json o{{"shape", ob.shape == Obstacle::Shape::Plane ? "plane" : "cylinder"},
           {"point_m", to_array(ob.point)},
           {"direction", to_array(ob.direction)},
           {"frictional", ob.frictional}};
    if (ob.shape == Obstacle::Shape::Cylinder) {
      o["radius_m"] = ob.radius;
      o["half_length_m"] = ob.half_length;
    }
    obstacles.push_back(std::move(o));
  }
  j["obstacles"] = std::move(obstacles);
  j["horizon_frames"] = spec.horizon_frames;
  j["substeps_per_frame"] = spec.substeps_per_frame;
  j["dt_seconds"] = spec.dt;
  j["loss_frames"] = spec.loss_frames;
  j["occlusion"] = occlusion_to_json(spec.occlusion);
  j["samples_per_frame"] = spec.samples_per_frame;
  j["param_range"] = json{{"lo", spec.param_range.lo}, {"hi", spec.param_range.hi}};
  return j;
}

ScenarioSpec scenario_from_json_obj(const json& j) {
  const std::string where = "scenario";
  reject_unknown(j,
                 {"name", "grid", "material", "anchors", "obstacles", "horizon_frames",
                  "substeps_per_frame", "dt_seconds", "loss_frames", "occlusion",
                  "samples_per_frame", "param_range"},
                 where);
  ScenarioSpec spec;
  spec.name = text(need(j, "name", where), where + ".name");

  const json& g = need(j, "grid", where);
  reject_unknown(g, {"nx", "ny", "spacing_m", "origin_m", "axis_u", "axis_v"}, where + ".grid");
  spec.grid.nx = integer(need(g, "nx", where), where + ".grid.nx");
  spec.grid.ny = integer(need(g, "ny", where), where + ".grid.ny");
  spec.grid.spacing = num(need(g, "spacing_m", where), where + ".grid.spacing_m");
  spec.grid.origin = vec3(need(g, "origin_m", where), where + ".grid.origin_m");
  spec.grid.axis_u = vec3(need(g, "axis_u", where), where + ".grid.axis_u");
  spec.grid.axis_v = vec3(need(g, "axis_v", where), where + ".grid.axis_v");

  spec.material = material_from_json(need(j, "material", where), where + ".material");

  const json& anchors = need(j, "anchors", where);
  if (!anchors.is_array()) throw ValidationError(where + ".anchors: expected an array");
  for (size_t i = 0; i < anchors.size(); ++i) {
    const std::string aw = where + ".anchors[" + std::to_string(i) + "]";
    const json& a = anchors[i];
    reject_unknown(a, {"vertex", "waypoints_m"}, aw);
    AnchorTrack track;
    track.vertex = integer(need(a, "vertex", aw), aw + ".vertex");
    const json& way = need(a, "waypoints_m", aw);
    if (!way.is_array() || way.empty())
      throw ValidationError(aw + ".waypoints_m: expected a non-empty array");
    track.waypoints.resize(3, Eigen::Index(way.size()));
    for (size_t f = 0; f < way.size(); ++f)
      track.waypoints.col(Eigen::Index(f)) = vec3(way[f], aw + ".waypoints_m");
    spec.anchors.push_back(std::move(track));
  }

  const json& obstacles = need(j, "obstacles", where);
  if (!obstacles.is_array()) throw ValidationError(where + ".obstacles: expected an array");
  for (size_t i = 0; i < obstacles.size(); ++i) {
    const std::string ow = where + ".obstacles[" + std::to_string(i) + "]";
    const json& o = obstacles[i];
    Obstacle ob;
    const std::string shape = text(need(o, "shape", ow), ow + ".shape");
    if (shape == "plane") {
      reject_unknown(o, {"shape", "point_m", "direction", "frictional"}, ow);
      ob.shape = Obstacle::Shape::Plane;
    } else if (shape == "cylinder") {
      reject_unknown(o, {"shape", "point_m", "direction", "frictional", "radius_m",
                         "half_length_m"},
                     ow);
      ob.shape = Obstacle::Shape::Cylinder;
      ob.radius = num(need(o, "radius_m", ow), ow + ".radius_m");
      ob.half_length = num(need(o, "half_length_m", ow), ow + ".half_length_m");
    } else {
      throw ValidationError(ow + ": unknown shape '" + shape + "'");
    }
    ob.point = vec3(need(o, "point_m", ow), ow + ".point_m");
    ob.direction = vec3(need(o, "direction", ow), ow + ".direction");
    ob.frictional = boolean(need(o, "frictional", ow), ow + ".frictional");
    spec.obstacles.push_back(ob);
  }

  spec.horizon_frames = integer(need(j, "horizon_frames", where), where + ".horizon_frames");
  spec.substeps_per_frame =
      integer(need(j, "substeps_per_frame", where), where + ".substeps_per_frame");
  spec.dt = num(need(j, "dt_seconds", where), where + ".dt_seconds");
  const json& lf = need(j, "loss_frames", where);
  if (!lf.is_array()) throw ValidationError(where + ".loss_frames: expected an array");
  spec.loss_frames.clear();
  for (const json& f : lf) spec.loss_frames.push_back(integer(f, where + ".loss_frames"));
  spec.occlusion = occlusion_from_json(need(j, "occlusion", where), where + ".occlusion");
  spec.samples_per_frame =
      integer(need(j, "samples_per_frame", where), where + ".samples_per_frame");
  const json& pr = need(j, "param_range", where);
  reject_unknown(pr, {"lo", "hi"}, where + ".param_range");
  spec.param_range.lo = num(need(pr, "lo", where), where + ".param_range.lo");
  spec.param_range.hi = num(need(pr, "hi", where), where + ".param_range.hi");

  validate_scenario(spec);
  return spec;
}

}  // namespace

std::filesystem::path default_output_root() {
  const char* env = std::getenv("CLOTHFIT_OUT_ROOT");
  if (env == nullptr || *env == '\0') return fs::path(".");
  return fs::path(env);
}

std::filesystem::path resolve_output_dir(const std::string& out_arg) {
  if (out_arg.empty()) throw ValidationError("output directory is empty");
  fs::path p(out_arg);
  if (p.is_absolute()) return p;
  return default_output_root() / p;
}

void write_xyz(const std::filesystem::path& path, const Mat3X& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    out << format_g9(points(0, i)) << ' ' << format_g9(points(1, i)) << ' '
        << format_g9(points(2, i)) << '\n';
  }
  out.flush();
  if (!out.good()) throw IoError("write failed: " + path.string());
}

Mat3X read_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Vec3> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    Vec3 p;
    std::string extra;
    if (!(ss >> p.x() >> p.y() >> p.z()) || (ss >> extra))
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'x y z'");
    if (!p.allFinite())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": non-finite coordinate");
    pts.push_back(p);
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
  Mat3X out(3, Eigen::Index(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i) out.col(Eigen::Index(i)) = pts[i];
  return out;
}

std::string scenario_to_json(const ScenarioSpec& spec) {
  return scenario_to_json_obj(spec).dump(2) + "\n";
}

ScenarioSpec scenario_from_json(const std::string& text) {
  return scenario_from_json_obj(parse_json(text, "scenario config"));
}

void write_scenario_config(const std::filesystem::path& path, const ScenarioSpec& spec) {
  spill(path, scenario_to_json(spec));
}

ScenarioSpec load_scenario(const std::string& name_or_path) {
  if (is_builtin_scenario(name_or_path)) return make_scenario(name_or_path);
  if (!fs::exists(name_or_path))
    throw ValidationError("scenario '" + name_or_path +
                          "' is neither a built-in name nor a config file");
  return scenario_from_json(slurp(name_or_path));
}

void write_target(const std::filesystem::path& dir, const TargetSequence& target) {
  if (target.frames.empty()) throw ValidationError("target has no frames");
  ensure_dir(dir);
  json j;
  j["format"] = "target-sequence-v1";
  j["tool_version"] = kToolVersion;
  j["scenario"] = target.meta.scenario_name;
  j["frame_count"] = target.frames.size();
  j["samples_per_frame"] = target.meta.samples_per_frame;
  j["seed"] = target.meta.seed;
  j["augment"] = json{{"noise_sigma_m", target.meta.augment.noise_sigma},
                      {"drop_fraction", target.meta.augment.drop_fraction}};
  if (target.meta.has_true_params)
    j["true_params"] =
        json{{"w_stiff", target.meta.true_w_stiff}, {"w_mass", target.meta.true_w_mass}};
  spill(dir / "manifest.json", j.dump(2) + "\n");
  for (size_t f = 0; f < target.frames.size(); ++f)
    write_xyz(dir / frame_file(int(f), "xyz"), target.frames[f]);
}

TargetSequence read_target(const std::filesystem::path& dir) {
  const std::string where = "target manifest";
  const json j = parse_json(slurp(dir / "manifest.json"), where);
  reject_unknown(j,
                 {"format", "tool_version", "scenario", "frame_count", "samples_per_frame",
                  "seed", "augment", "true_params"},
                 where);
  if (text(need(j, "format", where), where) != "target-sequence-v1")
    throw ValidationError(where + ": unsupported format");
  TargetSequence target;
  target.meta.scenario_name = text(need(j, "scenario", where), where + ".scenario");
  target.meta.samples_per_frame =
      integer(need(j, "samples_per_frame", where), where + ".samples_per_frame");
  target.meta.seed = u64(need(j, "seed", where), where + ".seed");
  const json& aug = need(j, "augment", where);
  reject_unknown(aug, {"noise_sigma_m", "drop_fraction"}, where + ".augment");
  target.meta.augment.noise_sigma =
      num(need(aug, "noise_sigma_m", where), where + ".augment.noise_sigma_m");
  target.meta.augment.drop_fraction =
      num(need(aug, "drop_fraction", where), where + ".augment.drop_fraction");
  if (j.contains("true_params")) {
    const json& tp = j["true_params"];
    reject_unknown(tp, {"w_stiff", "w_mass"}, where + ".true_params");
    target.meta.true_w_stiff = num(need(tp, "w_stiff", where), where + ".true_params.w_stiff");
    target.meta.true_w_mass = num(need(tp, "w_mass", where), where + ".true_params.w_mass");
    target.meta.has_true_params = true;
  }
  const int frame_count = integer(need(j, "frame_count", where), where + ".frame_count");
  if (frame_count < 1) throw ValidationError(where + ": frame_count must be positive");
  target.frames.resize(frame_count);
  for (int f = 0; f < frame_count; ++f) {
    target.frames[f] = read_xyz(dir / frame_file(f, "xyz"));
    if (target.frames[f].cols() == 0)
      throw ValidationError(dir.string() + ": frame " + std::to_string(f) + " is empty");
  }
  return target;
}

void write_estimate_outputs(const std::filesystem::path& dir, const EstimateResult& result) {
  ensure_dir(dir);
  json j;
  j["format"] = "estimate-result-v1";
  j["tool_version"] = kToolVersion;
  j["best"] = json{{"w_stiff", result.best_w_stiff},
                   {"w_mass", result.best_w_mass},
                   {"loss", num_or_null(result.best_loss)},
                   {"iteration", result.best_iteration}};
  j["termination_reason"] = stop_reason_name(result.reason);
  json iters = json::array();
  for (const IterationRecord& r : result.history) {
    iters.push_back(json{{"iteration", r.iteration},
                         {"s_stiff", r.latent.s_stiff},
                         {"s_mass", r.latent.s_mass},
                         {"w_stiff", r.w_stiff},
                         {"w_mass", r.w_mass},
                         {"loss", num_or_null(r.loss)},
                         {"diverged", !std::isfinite(r.loss)},
                         {"d_loss_d_w_stiff", num_or_null(r.grad_w.d_w_stiff)},
                         {"d_loss_d_w_mass", num_or_null(r.grad_w.d_w_mass)},
                         {"d_loss_d_s_stiff", num_or_null(r.grad_latent(0))},
                         {"d_loss_d_s_mass", num_or_null(r.grad_latent(1))},
                         {"millis", r.millis}});
  }
  j["iterations"] = std::move(iters);
  spill(dir / "results.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv << "iteration,loss,w_stiff,w_mass\n";
  for (const IterationRecord& r : result.history) {
    csv << r.iteration << ',' << (std::isfinite(r.loss) ? format_g17(r.loss) : "inf") << ','
        << format_g17(r.w_stiff) << ',' << format_g17(r.w_mass) << '\n';
  }
  spill(dir / "loss_curve.csv", csv.str());
}

void write_run_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  ensure_dir(dir);
  json j;
  j["format"] = "run-manifest-v1";
  j["tool_version"] = kToolVersion;
  j["command"] = manifest.command;
  j["arguments"] = manifest.arguments;
  j["seed"] = manifest.seed;
  j["scenario"] = scenario_to_json_obj(manifest.scenario);
  json phases = json::array();
  for (const PhaseTiming& p : manifest.phases)
    phases.push_back(json{{"name", p.name}, {"millis", p.millis}});
  j["phases_ms"] = std::move(phases);
  spill(dir / "run_manifest.json", j.dump(2) + "\n");
}

DatasetReport generate_dataset(const ScenarioSpec& spec, const DatasetSpec& dspec,
                               const std::filesystem::path& out_dir) {
  validate_scenario(spec);
  if (dspec.train_count < 1 || dspec.test_count < 1)
    throw ValidationError("dataset split counts must be at least 1");
  if (!(dspec.range.lo >= spec.param_range.lo && dspec.range.hi <= spec.param_range.hi &&
        dspec.range.lo < dspec.range.hi))
    throw ValidationError("dataset parameter range must lie within the scenario range");

  ensure_dir(out_dir);
  write_scenario_config(out_dir / "scenario.json", spec);
  std::ostringstream labels;
  labels << "id,split,w_stiff,w_mass,seed\n";

  DatasetReport report;
  constexpr int kMaxAttempts = 20;
  const struct {
    const char* name;
    std::uint64_t tag;
    int count;
  } splits[2] = {{"train", 1, dspec.train_count}, {"test", 2, dspec.test_count}};

  for (const auto& split : splits) {
    ensure_dir(out_dir / split.name);
    for (int i = 0; i < split.count; ++i) {
      bool written = false;
      Real last_ws = 0, last_wm = 0;
      for (int attempt = 0; attempt < kMaxAttempts && !written; ++attempt) {
        const std::uint64_t ex_seed =
            mix_seed(dspec.seed, split.tag, std::uint64_t(i) * kMaxAttempts + attempt);
        Rng rng(mix_seed(ex_seed, 17));
        const Real ws = rng.uniform(dspec.range.lo, dspec.range.hi);
        const Real wm = rng.uniform(dspec.range.lo, dspec.range.hi);
        last_ws = ws;
        last_wm = wm;
        TargetSequence target;
        try {
          target = generate_target(spec, ws, wm, ex_seed, dspec.augment);
        } catch (const SimDiverged&) {
          ++report.redraws;
          continue;
        }
        char name[32];
        std::snprintf(name, sizeof(name), "ex_%04d", i);
        write_target(out_dir / split.name / name, target);
        labels << split.name << '/' << name << ',' << split.name << ',' << format_g17(ws) << ','
               << format_g17(wm) << ',' << ex_seed << '\n';
        ++report.written;
        written = true;
      }
      if (!written) throw SimDiverged(-1, last_ws, last_wm);
    }
  }
  spill(out_dir / "labels.csv", labels.str());
  return report;
}

void export_trajectory_ply(const std::filesystem::path& dir, const TriMesh& mesh,
                           const Trajectory& traj) {
  ensure_dir(dir);
  for (int f = 0; f <= traj.frames; ++f) {
    std::ofstream out(dir / frame_file(f, "ply"), std::ios::binary);
    if (!out) throw IoError("cannot open PLY frame file for writing");
    write_ply(out, traj.frame_state(f).positions, mesh.faces);
    if (!out.good()) throw IoError("PLY write failed");
  }
}

}  // namespace clothfit
