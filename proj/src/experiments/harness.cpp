#include "bevdrive/experiments/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "bevdrive/nn/checkpoint.hpp"
#include "bevdrive/route/predictor.hpp"

namespace bevdrive::experiments {

namespace fs = std::filesystem;

HarnessConfig HarnessConfig::from_config(const Config& cfg) {
  HarnessConfig h;
  h.out_dir = cfg.get_str("study.out_dir", h.out_dir);
  h.seeds = static_cast<int>(cfg.get_int("study.seeds", h.seeds));
  h.budget_steps = cfg.get_int("study.budget_steps", h.budget_steps);
  h.predicted_route_budget_multiplier =
      cfg.get_int("study.predicted_route_budget_multiplier", h.predicted_route_budget_multiplier);
  h.eval_episodes = static_cast<int>(cfg.get_int("study.eval_episodes", h.eval_episodes));
  h.eval_scenario_base = static_cast<uint64_t>(cfg.get_int("study.eval_scenario_base",
                                                           static_cast<int64_t>(h.eval_scenario_base)));
  h.train_scenario_base = static_cast<uint64_t>(
      cfg.get_int("study.train_scenario_base", static_cast<int64_t>(h.train_scenario_base)));
  h.jobs = static_cast<int>(cfg.get_int("study.jobs", h.jobs));

  auto& town = h.scenario.town_spec;
  town.grid_rows = static_cast<int>(cfg.get_int("town.grid_rows", town.grid_rows));
  town.grid_cols = static_cast<int>(cfg.get_int("town.grid_cols", town.grid_cols));
  town.block_m = cfg.get_double("town.block_m", town.block_m);
  town.lane_width = cfg.get_double("town.lane_width", 4.0);
  town.lanes = static_cast<int>(cfg.get_int("town.lanes", town.lanes));
  town.junction_fraction = cfg.get_double("town.junction_fraction", town.junction_fraction);
  town.box_clearance_m = cfg.get_double("town.box_clearance_m", 4.0);
  town.green_s = cfg.get_double("town.green_s", town.green_s);
  town.yellow_s = cfg.get_double("town.yellow_s", town.yellow_s);
  town.red_s = cfg.get_double("town.red_s", town.red_s);

  h.scenario.mission_length_m = cfg.get_double("scenario.mission_length_m", 150.0);
  h.scenario.waypoint_spacing_m = cfg.get_double("scenario.waypoint_spacing_m", 25.0);
  h.scenario.traffic_count = static_cast<int>(cfg.get_int("scenario.traffic", 2));
  h.scenario.pedestrian_count = static_cast<int>(cfg.get_int("scenario.pedestrians", 0));
  h.scenario.step_limit = static_cast<int>(cfg.get_int("scenario.step_limit", 900));

  auto& rw = h.env.reward;
  rw.progress_weight = cfg.get_double("reward.progress", rw.progress_weight);
  rw.lateral_weight = cfg.get_double("reward.lateral", rw.lateral_weight);
  rw.heading_weight = cfg.get_double("reward.heading", rw.heading_weight);
  rw.speed_weight = cfg.get_double("reward.speed", rw.speed_weight);
  rw.target_speed = cfg.get_double("reward.target_speed", 4.5);
  rw.collision_penalty = cfg.get_double("reward.collision_penalty", rw.collision_penalty);
  rw.red_light_penalty = cfg.get_double("reward.red_light_penalty", rw.red_light_penalty);
  rw.offroad_penalty = cfg.get_double("reward.offroad_penalty", rw.offroad_penalty);

  h.env.vehicle.max_steer_rate = cfg.get_double("vehicle.max_steer_rate", 0.0);
  h.env.temporal_stride = static_cast<int>(cfg.get_int("env.temporal_stride", 4));
  h.env.route_render.stroke_width_m = cfg.get_double("env.route_stroke_m", 0.6);
  h.env.route_render.heatmap_sigma_m = cfg.get_double("env.heatmap_sigma_m", 2.0);
  h.env.stop_zone_includes_yellow = cfg.get_bool("env.stop_zone_includes_yellow", false);
  h.env.road_profile.target_iou = cfg.get_double("degrade.road_iou", 0.924);
  h.env.lane_profile.target_iou = cfg.get_double("degrade.lane_iou", 0.756);
  h.env.road_profile.ood_multiplier = cfg.get_double("degrade.ood_multiplier", 1.0);
  h.env.lane_profile.ood_multiplier = h.env.road_profile.ood_multiplier;
  h.env.classifier.tpr = cfg.get_double("classifier.tpr", 0.95);
  h.env.classifier.fpr = cfg.get_double("classifier.fpr", 0.02);
  h.env.classifier.threshold = cfg.get_double("classifier.threshold", 0.4);
  h.env.classifier.latency_steps = static_cast<int>(cfg.get_int("classifier.latency", 0));

  h.ppo.gamma = cfg.get_double("ppo.gamma", h.ppo.gamma);
  h.ppo.lambda = cfg.get_double("ppo.lambda", h.ppo.lambda);
  h.ppo.clip_ratio = static_cast<float>(cfg.get_double("ppo.clip", h.ppo.clip_ratio));
  h.ppo.epochs = static_cast<int>(cfg.get_int("ppo.epochs", h.ppo.epochs));
  h.ppo.minibatch = static_cast<int>(cfg.get_int("ppo.minibatch", h.ppo.minibatch));
  h.ppo.value_coef = static_cast<float>(cfg.get_double("ppo.value_coef", h.ppo.value_coef));
  h.ppo.entropy_coef = static_cast<float>(cfg.get_double("ppo.entropy_coef", h.ppo.entropy_coef));
  h.ppo.learning_rate = static_cast<float>(cfg.get_double("ppo.learning_rate", h.ppo.learning_rate));
  h.ppo.rollout_len = static_cast<int>(cfg.get_int("ppo.rollout_len", h.ppo.rollout_len));
  h.ppo.num_envs = static_cast<int>(cfg.get_int("ppo.num_envs", h.ppo.num_envs));

  h.policy_pool = static_cast<int>(cfg.get_int("policy.pool", h.policy_pool));
  h.policy_trunk = static_cast<int>(cfg.get_int("policy.trunk", h.policy_trunk));
  h.policy_meas_embed = static_cast<int>(cfg.get_int("policy.meas_embed", h.policy_meas_embed));
  h.policy_init_log_std =
      static_cast<float>(cfg.get_double("policy.init_log_std", h.policy_init_log_std));
  const std::string conv = cfg.get_str("policy.conv", "");
  if (!conv.empty()) {
    h.policy_conv.clear();
    size_t pos = 0;
    while (pos < conv.size()) {
      const size_t comma = conv.find(',', pos);
      h.policy_conv.push_back(std::stoi(conv.substr(pos, comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }

  h.predictor_checkpoint = cfg.get_str("predictor.checkpoint", "");
  h.predictor_samples = static_cast<int>(cfg.get_int("predictor.samples", h.predictor_samples));
  h.predictor_epochs = static_cast<int>(cfg.get_int("predictor.epochs", h.predictor_epochs));
  return h;
}

namespace {

fs::path run_dir(const HarnessConfig& cfg, VariantId variant, int seed_index) {
  return fs::path(cfg.out_dir) / variant_name(variant) / ("seed" + std::to_string(seed_index));
}

std::optional<RunSummary> load_summary(const fs::path& dir, VariantId variant, int seed_index) {
  const fs::path file = dir / "summary.json";
  std::ifstream in(file);
  if (!in) return std::nullopt;
  try {
    nlohmann::json j;
    in >> j;
    RunSummary s;
    s.variant = variant;
    s.seed_index = seed_index;
    s.ds_mean = j.at("ds").get<double>();
    s.rc_mean = j.at("rc").get<double>();
    s.is_mean = j.at("is").get<double>();
    s.return_mean = j.at("return").get<double>();
    s.eval_episodes = j.at("eval_episodes").get<int>();
    s.budget_steps = j.at("budget_steps").get<int64_t>();
    s.train_seconds = j.at("train_seconds").get<double>();
    return s;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void save_summary(const fs::path& dir, const RunSummary& s) {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(s.variant);
  j["seed"] = s.seed_index;
  j["ds"] = s.ds_mean;
  j["rc"] = s.rc_mean;
  j["is"] = s.is_mean;
  j["return"] = s.return_mean;
  j["eval_episodes"] = s.eval_episodes;
  j["budget_steps"] = s.budget_steps;
  j["train_seconds"] = s.train_seconds;
  std::ofstream out(dir / "summary.json");
  out << j.dump(2) << "\n";
}

int64_t variant_budget(const HarnessConfig& cfg, VariantId variant) {
  if (variant == VariantId::PredictedRoute) {
    return cfg.budget_steps * cfg.predicted_route_budget_multiplier;
  }
  return cfg.budget_steps;
}

}  // namespace

std::string ensure_route_predictor(const HarnessConfig& cfg) {
  if (!cfg.predictor_checkpoint.empty() && fs::exists(cfg.predictor_checkpoint)) {
    return cfg.predictor_checkpoint;
  }
  const fs::path path = cfg.predictor_checkpoint.empty()
                            ? fs::path(cfg.out_dir) / "route_predictor.bvdc"
                            : fs::path(cfg.predictor_checkpoint);
  if (fs::exists(path)) return path.string();
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());

  std::fprintf(stderr, "[harness] training route predictor -> %s\n", path.string().c_str());
  route::DatasetGenConfig gen;
  gen.samples = cfg.predictor_samples;
  gen.town_spec = cfg.scenario.town_spec;
  gen.seed = 99;
  const route::RouteDataset dataset = route::generate_route_dataset(gen);
  route::RoutePredictor model({}, 13);
  route::TrainConfig tc;
  tc.epochs = cfg.predictor_epochs;
  tc.target_iou = 0.55;
  route::train_route_predictor(&model, dataset, tc, [](int epoch, float loss, double iou) {
    std::fprintf(stderr, "[predictor] epoch %d loss %.4f val-iou %.3f\n", epoch, loss, iou);
  });
  model.save(path.string());
  return path.string();
}

RunSummary run_single(const HarnessConfig& cfg, VariantId variant, int seed_index) {
  const fs::path dir = run_dir(cfg, variant, seed_index);
  const int64_t budget = variant_budget(cfg, variant);
  if (auto existing = load_summary(dir, variant, seed_index)) {
    if (existing->budget_steps == budget && existing->eval_episodes == cfg.eval_episodes) {
      return *existing;
    }
  }
  fs::create_directories(dir);

  std::shared_ptr<const route::RoutePredictor> predictor;
  if (variant == VariantId::PredictedRoute) {
    predictor = route::RoutePredictor::load(ensure_route_predictor(cfg));
  }

  env::DrivingVecEnv::Config vcfg;
  vcfg.scenario = cfg.scenario;
  vcfg.scenario.variant = variant;
  vcfg.env = cfg.env;
  vcfg.num_envs = cfg.ppo.num_envs;
  vcfg.pool = cfg.policy_pool;
  vcfg.scenario_seed_base = cfg.train_scenario_base;
  vcfg.env_seed_base = 100 + static_cast<uint64_t>(seed_index) * 977;
  env::DrivingVecEnv venv(vcfg, predictor);

  rl::PolicyNetConfig ncfg;
  ncfg.grid_side = venv.grid_side();
  ncfg.meas_dim = venv.meas_dim();
  ncfg.conv_channels = cfg.policy_conv;
  ncfg.trunk_width = cfg.policy_trunk;
  ncfg.meas_embed = cfg.policy_meas_embed;
  ncfg.init_log_std = cfg.policy_init_log_std;
  rl::PolicyValueNet net(ncfg, 1234 + static_cast<uint64_t>(seed_index));
  nn::Adam opt({.lr = cfg.ppo.learning_rate});

  rl::PpoConfig pcfg = cfg.ppo;
  pcfg.total_steps = budget;

  std::ofstream metrics_log(dir / "train_log.jsonl");
  const auto t0 = std::chrono::steady_clock::now();
  rl::train(&venv, &net, &opt, pcfg, 31337 + static_cast<uint64_t>(seed_index) * 101,
            [&](const rl::IterationStats& s) {
              char line[512];
              std::snprintf(line, sizeof(line),
                            "{\"step\":%lld,\"return\":%.6g,\"episode_len\":%.6g,"
                            "\"episodes\":%d,\"policy_loss\":%.6g,\"value_loss\":%.6g,"
                            "\"entropy\":%.6g,\"kl\":%.6g,\"clip_fraction\":%.6g,"
                            "\"steps_per_second\":%.6g}",
                            static_cast<long long>(s.env_steps), s.mean_episode_return,
                            s.mean_episode_len, s.episodes_finished, s.loss.policy_loss,
                            s.loss.value_loss, s.loss.entropy, s.loss.kl, s.loss.clip_fraction,
                            s.steps_per_second);
              metrics_log << line << "\n";
              metrics_log.flush();
            });
  const double train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Checkpoint.
  {
    auto params = net.params();
    nn::save_checkpoint((dir / "policy.bvdc").string(), net.specs(), params);
  }

  // Deterministic evaluation on the shared held-out scenarios.
  RunSummary summary;
  summary.variant = variant;
  summary.seed_index = seed_index;
  summary.budget_steps = budget;
  summary.eval_episodes = cfg.eval_episodes;
  summary.train_seconds = train_seconds;
  std::ofstream eval_log(dir / "eval.jsonl");
  for (int i = 0; i < cfg.eval_episodes; ++i) {
    env::ScenarioParams sp = cfg.scenario;
    sp.variant = variant;
    const auto scenario = env::make_random_scenario(cfg.eval_scenario_base + static_cast<uint64_t>(i), sp);
    env::Environment e(cfg.env);
    if (predictor) e.set_route_predictor(predictor);
    e.set_log_sink([&](const std::string& line) { eval_log << line << "\n"; });
    const auto res = env::run_policy_episode(&e, &net, cfg.policy_pool, scenario,
                                             cfg.eval_env_seed_base + static_cast<uint64_t>(i));
    summary.ds_mean += res.metrics.driving_score;
    summary.rc_mean += res.metrics.route_completion;
    summary.is_mean += res.metrics.infraction_score;
    summary.return_mean += res.episode_return;
  }
  summary.ds_mean /= cfg.eval_episodes;
  summary.rc_mean /= cfg.eval_episodes;
  summary.is_mean /= cfg.eval_episodes;
  summary.return_mean /= cfg.eval_episodes;
  save_summary(dir, summary);
  return summary;
}

std::vector<RunSummary> run_variant(const HarnessConfig& cfg, VariantId variant) {
  std::vector<RunSummary> out(static_cast<size_t>(cfg.seeds));
  if (variant == VariantId::PredictedRoute) {
    ensure_route_predictor(cfg);  // train once before any parallel fan-out
  }
  if (cfg.jobs <= 1) {
    for (int s = 0; s < cfg.seeds; ++s) out[static_cast<size_t>(s)] = run_single(cfg, variant, s);
    return out;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int j = 0; j < std::min(cfg.jobs, cfg.seeds); ++j) {
    pool.emplace_back([&] {
      for (int s = next.fetch_add(1); s < cfg.seeds; s = next.fetch_add(1)) {
        out[static_cast<size_t>(s)] = run_single(cfg, variant, s);
      }
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

std::vector<RunSummary> load_existing_summaries(const HarnessConfig& cfg) {
  std::vector<RunSummary> out;
  for (int v = 0; v <= static_cast<int>(VariantId::MeasurementFlagStop); ++v) {
    for (int s = 0; s < cfg.seeds; ++s) {
      const auto dir = run_dir(cfg, static_cast<VariantId>(v), s);
      if (auto summary = load_summary(dir, static_cast<VariantId>(v), s)) {
        out.push_back(*summary);
      }
    }
  }
  return out;
}

void write_report(const HarnessConfig& cfg, const std::vector<RunSummary>& runs) {
  fs::create_directories(cfg.out_dir);
  std::ofstream csv(fs::path(cfg.out_dir) / "report.csv");
  csv << "variant,seed,ds,rc,is,return,eval_episodes,budget_steps,train_seconds\n";
  for (const auto& r : runs) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%d,%.6f,%.6f,%.6f,%.6f,%d,%lld,%.1f\n",
                  variant_name(r.variant), r.seed_index, r.ds_mean, r.rc_mean, r.is_mean,
                  r.return_mean, r.eval_episodes, static_cast<long long>(r.budget_steps),
                  r.train_seconds);
    csv << line;
  }
}

double median_ds(const std::vector<RunSummary>& runs, VariantId variant) {
  std::vector<double> ds;
  for (const auto& r : runs) {
    if (r.variant == variant) ds.push_back(r.ds_mean);
  }
  if (ds.empty()) return -1.0;
  std::sort(ds.begin(), ds.end());
  const size_t n = ds.size();
  return n % 2 == 1 ? ds[n / 2] : 0.5 * (ds[n / 2 - 1] + ds[n / 2]);
}

std::vector<OrderingCheck> check_orderings(const std::vector<RunSummary>& runs) {
  std::vector<OrderingCheck> checks;
  const double expert = median_ds(runs, VariantId::Expert);
  auto add = [&](const std::string& name, VariantId variant, double factor, bool lower_bound) {
    OrderingCheck c;
    c.name = name;
    c.lhs = median_ds(runs, variant);
    c.rhs = factor * expert;
    if (c.lhs < 0 || expert < 0) {
      c.passed = false;
      c.detail = "missing runs";
    } else {
      c.passed = lower_bound ? c.lhs >= c.rhs : c.lhs <= c.rhs;
      char buf[160];
      std::snprintf(buf, sizeof(buf), "median DS %.3f %s %.3f (= %.2f x Expert %.3f)", c.lhs,
                    lower_bound ? ">=" : "<=", c.rhs, factor, expert);
      c.detail = buf;
    }
    checks.push_back(c);
  };
  add("NoStatic >= 0.8 x Expert", VariantId::NoStatic, 0.8, true);
  add("TargetHeatmap <= 0.25 x Expert", VariantId::TargetHeatmap, 0.25, false);
  add("GtBinaryStop >= 0.8 x Expert", VariantId::GtBinaryStop, 0.8, true);
  add("PredictedBinaryStop >= 0.7 x Expert", VariantId::PredictedBinaryStop, 0.7, true);
  add("MeasurementFlagStop <= 0.25 x Expert", VariantId::MeasurementFlagStop, 0.25, false);
  add("StaticPredicted >= 0.75 x Expert", VariantId::StaticPredicted, 0.75, true);
  return checks;
}

}  // namespace bevdrive::experiments
