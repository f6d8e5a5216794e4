#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "activepose/bench.hpp"

using nlohmann::json;
using namespace activepose;

namespace {

json pose_json(const Pose& p) {
  const auto v = pose_to_seven(p);
  return std::vector<double>(v.begin(), v.end());
}

Pose pose_from_json(const json& j) {
  std::array<double, 7> v;
  if (!j.is_array() || j.size() != 7) throw std::runtime_error("pose must be a 7-array");
  for (int i = 0; i < 7; ++i) v[i] = j[i].get<double>();
  return pose_from_seven(v);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_nbv(const json& j, NBVConfig& n) {
  get_if(j, "tau", n.tau);
  get_if(j, "lambda", n.lambda);
  get_if(j, "m", n.m);
  get_if(j, "candidate_radius", n.candidate_radius);
  get_if(j, "use_normalized_entropy", n.use_normalized_entropy);
}

void apply_tracker(const json& j, TrackerConfig& t) {
  get_if(j, "horizon", t.horizon);
  get_if(j, "execute_count", t.execute_count);
  get_if(j, "history", t.history);
  get_if(j, "n_total", t.n_total);
  get_if(j, "pose_loss_frames", t.pose_loss_frames);
  if (j.contains("hand_eye")) t.hand_eye = pose_from_json(j.at("hand_eye"));
  get_if(j, "execute_first_k", t.execute_first_k);
  if (j.contains("workspace_center")) {
    const auto v = j.at("workspace_center").get<std::vector<double>>();
    if (v.size() != 3) throw std::runtime_error("workspace_center must be a 3-array");
    t.workspace_center = {v[0], v[1], v[2]};
  }
  get_if(j, "workspace_radius", t.workspace_radius);
  get_if(j, "standoff", t.standoff);
  get_if(j, "elevation", t.elevation);
  get_if(j, "max_step_rotation", t.max_step_rotation);
  get_if(j, "max_step_translation", t.max_step_translation);
  get_if(j, "approach_gain", t.approach_gain);
  get_if(j, "lock_distance", t.lock_distance);
  if (j.contains("intrinsics")) {
    const json& c = j.at("intrinsics");
    get_if(c, "fx", t.intrinsics.fx);
    get_if(c, "fy", t.intrinsics.fy);
    get_if(c, "cx", t.intrinsics.cx);
    get_if(c, "cy", t.intrinsics.cy);
    get_if(c, "width", t.intrinsics.width);
    get_if(c, "height", t.intrinsics.height);
    get_if(c, "near_clip", t.intrinsics.near_clip);
    get_if(c, "far_clip", t.intrinsics.far_clip);
  }
}

void apply_train(const json& j, TrainConfig& c) {
  get_if(j, "batch_size", c.batch_size);
  get_if(j, "learning_rate", c.learning_rate);
  get_if(j, "epochs", c.epochs);
  get_if(j, "n_steps", c.n_steps);
  get_if(j, "seed", c.seed);
  get_if(j, "hidden_width", c.hidden_width);
  get_if(j, "history", c.history);
  get_if(j, "horizon", c.horizon);
  get_if(j, "weight_decay", c.weight_decay);
}

void apply_bench(const json& j, BenchConfig& cfg) {
  if (j.contains("nbv")) apply_nbv(j.at("nbv"), cfg.nbv);
  if (j.contains("tracker")) apply_tracker(j.at("tracker"), cfg.tracker);
  if (j.contains("noise")) {
    get_if(j.at("noise"), "translation_sigma", cfg.noise.translation_sigma);
    get_if(j.at("noise"), "rotation_sigma", cfg.noise.rotation_sigma);
  }
  if (j.contains("criteria")) {
    get_if(j.at("criteria"), "max_translation_error", cfg.criteria.max_translation_error);
    get_if(j.at("criteria"), "max_rotation_error", cfg.criteria.max_rotation_error);
  }
  get_if(j, "scan_views", cfg.scan_views);
  get_if(j, "scan_radius", cfg.scan_radius);
  if (j.contains("initial_camera")) cfg.initial_camera = pose_from_json(j.at("initial_camera"));
  if (j.contains("world_camera")) cfg.world_camera = pose_from_json(j.at("world_camera"));
  get_if(j, "placement_disc_radius", cfg.placement_disc_radius);
  get_if(j, "table_z", cfg.table_z);
  get_if(j, "prompt_unambiguous", cfg.prompt_unambiguous);
  get_if(j, "prompt_ambiguous", cfg.prompt_ambiguous);
  get_if(j, "orbit_aware_judge", cfg.orbit_aware_judge);
  get_if(j, "tracking_object", cfg.tracking_object);
}

ObjectModel resolve_object(const std::string& name, const std::string& library) {
  if (library.empty()) return builtin_object(name);
  for (const ObjectModel& o : load_object_library(library)) {
    if (o.name == name) return o;
  }
  throw std::runtime_error("object " + name + " not found in " + library);
}

json hypothesis_set_json(const PoseHypothesisSet& est) {
  json out;
  out["camera"] = pose_json(est.source_view.camera);
  json hyps = json::array();
  for (const PoseHypothesis& h : est.hypotheses) {
    hyps.push_back({{"pose", pose_json(h.pose)}, {"probability", h.probability}});
  }
  out["hypotheses"] = hyps;
  return out;
}

int cmd_estimate(const std::string& object_name, const std::string& library,
                 const std::string& mode_name, std::uint64_t seed, const NBVConfig& nbv,
                 const std::string& scorer_name, const std::string& endpoint,
                 const std::string& auth_env, const std::string& scores_csv) {
  const ObjectModel object = resolve_object(object_name, library);
  BenchConfig cfg;
  cfg.nbv = nbv;

  const auto scan = offline_entropy_scan(object, cfg.scan_views, cfg.scan_radius);
  const auto prompt =
      build_prompt(scan, cfg.prompt_unambiguous, cfg.prompt_ambiguous, object.name);

  std::unique_ptr<AmbiguityScorer> scorer;
  if (scorer_name == "oracle") {
    scorer = std::make_unique<OracleScorer>(object);
  } else if (scorer_name == "remote") {
    RemoteScorerConfig rc;
    rc.endpoint = endpoint;
    rc.auth_token_env = auth_env;
    scorer = std::make_unique<RemoteScorer>(rc);
  } else {
    throw std::runtime_error("scorer must be oracle or remote");
  }

  const PlacementMode mode{placement_kind_from_name(mode_name),
                           fnv1a_hash("placement", seed)};
  const Pose truth = place_object(object, mode, scan, cfg);
  const NBVResult result = run_active_estimation(object, truth, cfg.initial_camera, prompt,
                                                 *scorer, cfg.nbv, EstimatorNoise{});
  const JudgeResult judge =
      judge_details(result.final_estimate, truth, cfg.criteria, object);

  json out;
  out["object"] = object.name;
  out["placement_mode"] = mode_name;
  out["seed"] = seed;
  out["truth"] = pose_json(truth);
  out["initial_p_amb"] = result.initial_p_amb;
  out["moved"] = result.moved;
  if (result.chosen_index) out["chosen_index"] = *result.chosen_index;
  out["final_estimate"] = hypothesis_set_json(result.final_estimate);
  out["judge"] = {{"success_orbit", judge.success_orbit},
                  {"success_raw", judge.success_raw},
                  {"translation_error", judge.translation_error},
                  {"rotation_error_orbit", judge.rotation_error_orbit},
                  {"rotation_error_raw", judge.rotation_error_raw}};
  json scores = json::array();
  for (const CandidateScore& c : result.candidate_scores) {
    scores.push_back({{"index", c.index},
                      {"camera", pose_json(c.camera)},
                      {"p_amb", c.p_amb},
                      {"entropy_nats", c.entropy_nats},
                      {"entropy_normalized", c.entropy_normalized},
                      {"score", c.score}});
  }
  out["candidate_scores"] = scores;
  std::cout << out.dump(2) << "\n";

  if (!scores_csv.empty()) {
    std::ofstream f(scores_csv);
    if (!f) throw std::runtime_error("cannot write " + scores_csv);
    f << "index,p_amb,entropy_nats,entropy_normalized,score\n";
    for (const CandidateScore& c : result.candidate_scores) {
      char line[160];
      std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.12g,%.12g\n", c.index, c.p_amb,
                    c.entropy_nats, c.entropy_normalized, c.score);
      f << line;
    }
  }
  return 0;
}

int cmd_track(const std::string& scenario_name, const std::string& checkpoint_path,
              std::uint64_t seed, const std::string& config_path,
              const std::string& object_name, const std::string& frames_csv) {
  BenchConfig cfg;
  if (!config_path.empty()) apply_bench(load_json(config_path), cfg);
  if (!object_name.empty()) cfg.tracking_object = object_name;

  const ObjectModel object = builtin_object(cfg.tracking_object);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Scenario scenario =
      make_scenario(scenario_kind_from_name(scenario_name), seed);
  EstimatorNoise noise = cfg.noise;
  noise.seed = seed;

  const TrackRun run = run_tracking(ckpt.params, scenario, cfg.tracker, noise, object);

  json out;
  out["scenario"] = scenario_name;
  out["seed"] = seed;
  out["object"] = object.name;
  out["success"] = run.success;
  out["planner_calls"] = run.planner_calls;
  out["pose_loss_events"] = run.pose_loss_events;
  out["frames"] = run.executed.size();
  std::cout << out.dump(2) << "\n";

  if (!frames_csv.empty()) {
    const auto traj = generate_object_trajectory(scenario);
    std::ofstream f(frames_csv);
    if (!f) throw std::runtime_error("cannot write " + frames_csv);
    f << "t,ee_tx,ee_ty,ee_tz,ee_qw,ee_qx,ee_qy,ee_qz,"
         "obj_tx,obj_ty,obj_tz,obj_qw,obj_qx,obj_qy,obj_qz,visible,event\n";
    for (std::size_t i = 0; i < run.executed.size(); ++i) {
      const auto ee = pose_to_seven(run.executed[i]);
      const auto obj = pose_to_seven(run.believed[i]);
      const bool event = std::find(run.pose_loss_events.begin(), run.pose_loss_events.end(),
                                   static_cast<int>(i)) != run.pose_loss_events.end();
      char line[512];
      std::snprintf(line, sizeof(line),
                    "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                    "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%d\n",
                    traj[i].t, ee[0], ee[1], ee[2], ee[3], ee[4], ee[5], ee[6], obj[0], obj[1],
                    obj[2], obj[3], obj[4], obj[5], obj[6], run.visible[i] ? 1 : 0,
                    event ? 1 : 0);
      f << line;
    }
  }
  return run.success ? 0 : 3;
}

int cmd_bench(const std::string& suite, std::vector<std::string> methods,
              std::vector<std::string> object_names, std::vector<std::string> mode_names,
              std::vector<std::string> scenario_names, int trials, std::uint64_t seed,
              const std::string& out_dir, const std::string& config_path,
              const std::string& checkpoint_path, const std::string& library) {
  BenchConfig cfg;
  if (!config_path.empty()) apply_bench(load_json(config_path), cfg);

  BenchReport report;
  if (suite == "estimation") {
    if (trials <= 0) trials = 10;
    std::vector<EstimationMethod> ms;
    if (methods.empty()) methods = {"FixedView", "RandomNBV", "ActiveNBV"};
    for (const auto& m : methods) ms.push_back(estimation_method_from_name(m));
    std::vector<ObjectModel> objects;
    if (object_names.empty()) {
      objects = library.empty() ? builtin_objects() : load_object_library(library);
    } else {
      for (const auto& n : object_names) objects.push_back(resolve_object(n, library));
    }
    std::vector<PlacementKind> modes;
    if (mode_names.empty()) mode_names = {"RandomPlacement", "HighEntropyPlacement"};
    for (const auto& m : mode_names) modes.push_back(placement_kind_from_name(m));
    report = run_estimation_benchmark(ms, objects, modes, trials, cfg, seed);
  } else if (suite == "tracking") {
    if (trials <= 0) trials = 20;
    if (checkpoint_path.empty()) throw std::runtime_error("tracking bench needs --checkpoint");
    std::vector<TrackingMethod> ms;
    if (methods.empty()) methods = {"PoseServo", "WorldCamera", "DiffusionTracker"};
    for (const auto& m : methods) ms.push_back(tracking_method_from_name(m));
    std::vector<ScenarioKind> kinds;
    if (scenario_names.empty()) {
      scenario_names = {"LinearMotion", "CircularRotation", "TemporaryOcclusion",
                        "RandomSpatial"};
    }
    for (const auto& s : scenario_names) kinds.push_back(scenario_kind_from_name(s));
    report = run_tracking_benchmark(ms, kinds, trials, cfg, load_checkpoint(checkpoint_path),
                                    seed);
  } else if (suite == "combined") {
    if (trials <= 0) trials = 20;
    if (checkpoint_path.empty()) throw std::runtime_error("combined bench needs --checkpoint");
    report = run_combined_benchmark(trials, cfg, load_checkpoint(checkpoint_path), seed);
  } else {
    throw std::runtime_error("suite must be estimation, tracking, or combined");
  }

  write_report(out_dir, report, cfg);

  bool ok = true;
  for (const CellAggregate& c : report.cells) {
    if (c.sr * c.trials != static_cast<double>(c.successes)) ok = false;
    if (c.successes < 0 || c.successes > c.trials) ok = false;
  }
  int applicable = 0, inapplicable = 0;
  for (const TrialOutcome& t : report.trials) (t.applicable ? applicable : inapplicable)++;
  std::cout << "suite=" << report.suite << " trials=" << report.trials.size()
            << " applicable=" << applicable << " cells=" << report.cells.size()
            << " output=" << out_dir << "\n";
  for (const CellAggregate& c : report.cells) {
    std::printf("%-18s %-14s %-22s trials=%-3d sr=%.3f sr_raw=%.3f%s\n", c.method.c_str(),
                c.object.c_str(), c.scenario.c_str(), c.trials, c.sr, c.sr_raw,
                c.applicable ? "" : " (not applicable)");
  }
  if (!ok) {
    std::cerr << "invariant check failed: SR arithmetic inconsistent\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"active pose estimation and tracking simulator"};
  app.require_subcommand(1);

  std::string object_name = "cyl-4fold", library, mode_name = "HighEntropyPlacement";
  std::string scorer_name = "oracle", endpoint, auth_env = "SCORER_TOKEN", scores_csv;
  std::uint64_t seed = 0;
  NBVConfig nbv;

  auto* est = app.add_subcommand("estimate", "run one active estimation episode");
  est->add_option("--object", object_name, "object name");
  est->add_option("--library", library, "object library file (defaults to builtins)");
  est->add_option("--placement", mode_name, "RandomPlacement or HighEntropyPlacement");
  est->add_option("--seed", seed, "episode seed");
  est->add_option("--tau", nbv.tau, "ambiguity threshold");
  est->add_option("--lambda", nbv.lambda, "entropy weight in the fused score");
  est->add_option("--m", nbv.m, "candidate viewpoint count");
  est->add_option("--scorer", scorer_name, "oracle or remote");
  est->add_option("--endpoint", endpoint, "remote scorer URL");
  est->add_option("--auth-env", auth_env, "env var holding the bearer token");
  est->add_option("--scores-csv", scores_csv, "write per-candidate scores to this CSV");

  auto* prompt_cmd = app.add_subcommand("prompt", "prompt utilities");
  std::string prompt_out = "prompt.json";
  int scan_views = 64;
  double scan_radius = 0.4;
  int u_count = 3, a_count = 1;
  auto* prompt_export = prompt_cmd->add_subcommand("export", "write a reference-view prompt");
  prompt_export->add_option("--object", object_name, "object name");
  prompt_export->add_option("--library", library, "object library file");
  prompt_export->add_option("--out", prompt_out, "output path");
  prompt_export->add_option("--scan-views", scan_views, "offline scan view count");
  prompt_export->add_option("--scan-radius", scan_radius, "offline scan radius");
  prompt_export->add_option("--unambiguous", u_count, "low-entropy reference view count");
  prompt_export->add_option("--ambiguous", a_count, "high-entropy reference view count");

  std::string dataset_out = "dataset.jsonl";
  std::vector<std::string> scenario_names;
  int demos = 10;
  std::string config_path;
  auto* dataset_cmd = app.add_subcommand("dataset", "generate expert demonstrations");
  dataset_cmd->add_option("--out", dataset_out, "output JSONL path");
  dataset_cmd->add_option("--scenarios", scenario_names, "scenario kinds")->delimiter(',');
  dataset_cmd->add_option("--demos", demos, "demonstrations per scenario");
  dataset_cmd->add_option("--seed", seed, "master seed");
  dataset_cmd->add_option("--config", config_path, "config file");

  std::string train_dataset, train_out = "checkpoint.json";
  TrainConfig train_cfg;
  auto* train_cmd = app.add_subcommand("train", "train the trajectory denoiser");
  train_cmd->add_option("--dataset", train_dataset, "JSONL dataset path")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output path");
  train_cmd->add_option("--config", config_path, "config file");
  train_cmd->add_option("--epochs", train_cfg.epochs, "training epochs");
  train_cmd->add_option("--batch", train_cfg.batch_size, "batch size");
  train_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
  train_cmd->add_option("--steps", train_cfg.n_steps, "denoising step count");
  train_cmd->add_option("--width", train_cfg.hidden_width, "hidden layer width");
  train_cmd->add_option("--history", train_cfg.history, "observation history length");
  train_cmd->add_option("--horizon", train_cfg.horizon, "prediction horizon");
  train_cmd->add_option("--weight-decay", train_cfg.weight_decay, "decoupled weight decay");
  train_cmd->add_option("--seed", train_cfg.seed, "training seed");

  std::string track_scenario = "LinearMotion", checkpoint_path, frames_csv, track_object;
  auto* track_cmd = app.add_subcommand("track", "run one closed-loop tracking episode");
  track_cmd->add_option("--scenario", track_scenario, "scenario kind");
  track_cmd->add_option("--checkpoint", checkpoint_path, "denoiser checkpoint")->required();
  track_cmd->add_option("--seed", seed, "episode seed");
  track_cmd->add_option("--config", config_path, "config file");
  track_cmd->add_option("--object", track_object, "tracked object name");
  track_cmd->add_option("--frames-csv", frames_csv, "write per-frame state to this CSV");

  std::string suite = "estimation", out_dir = "bench_out";
  std::vector<std::string> methods, object_names, mode_names;
  int trials = 0;
  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
  bench_cmd->add_option("--suite", suite, "estimation, tracking, or combined");
  bench_cmd->add_option("--methods", methods, "method names")->delimiter(',');
  bench_cmd->add_option("--objects", object_names, "object names")->delimiter(',');
  bench_cmd->add_option("--modes", mode_names, "placement modes")->delimiter(',');
  bench_cmd->add_option("--scenarios", scenario_names, "scenario kinds")->delimiter(',');
  bench_cmd->add_option("--trials", trials, "trials per cell");
  bench_cmd->add_option("--seed", seed, "master seed");
  bench_cmd->add_option("--out", out_dir, "output directory");
  bench_cmd->add_option("--config", config_path, "config file");
  bench_cmd->add_option("--checkpoint", checkpoint_path, "denoiser checkpoint");
  bench_cmd->add_option("--library", library, "object library file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) {
      return cmd_estimate(object_name, library, mode_name, seed, nbv, scorer_name, endpoint,
                          auth_env, scores_csv);
    }
    if (prompt_cmd->parsed() && prompt_export->parsed()) {
      const ObjectModel object = resolve_object(object_name, library);
      const auto scan = offline_entropy_scan(object, scan_views, scan_radius);
      export_prompt(prompt_out, build_prompt(scan, u_count, a_count, object.name));
      std::cout << "wrote " << prompt_out << "\n";
      return 0;
    }
    if (dataset_cmd->parsed()) {
      BenchConfig cfg;
      if (!config_path.empty()) apply_bench(load_json(config_path), cfg);
      if (scenario_names.empty()) {
        scenario_names = {"LinearMotion", "CircularRotation", "TemporaryOcclusion",
                          "RandomSpatial"};
      }
      std::vector<Scenario> scenarios;
      for (const auto& name : scenario_names) {
        scenarios.push_back(make_scenario(scenario_kind_from_name(name), seed));
      }
      const auto records = build_dataset(scenarios, demos, cfg.tracker);
      write_dataset(dataset_out, records);
      std::cout << "wrote " << records.size() << " records to " << dataset_out << "\n";
      return 0;
    }
    if (train_cmd->parsed()) {
      TrainConfig cfg = train_cfg;
      if (!config_path.empty()) {
        const json j = load_json(config_path);
        if (j.contains("train")) apply_train(j.at("train"), cfg);
      }
      const auto records = read_dataset(train_dataset);
      const auto dataset = make_training_samples(records, cfg.history, cfg.horizon);
      std::vector<double> curve;
      const DenoiserParams params = train(dataset, cfg, &curve);
      save_checkpoint(train_out, params, cfg, curve);
      std::cout << "trained on " << dataset.samples.size() << " windows, final loss "
                << (curve.empty() ? 0.0 : curve.back()) << ", wrote " << train_out << "\n";
      return 0;
    }
    if (track_cmd->parsed()) {
      return cmd_track(track_scenario, checkpoint_path, seed, config_path, track_object,
                       frames_csv);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(suite, methods, object_names, mode_names, scenario_names, trials, seed,
                       out_dir, config_path, checkpoint_path, library);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
