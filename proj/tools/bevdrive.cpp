// bevdrive: town generation, BEV rendering, route-predictor training, ablation
// studies, result tables, and episode replay.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "bevdrive/bev/image_io.hpp"
#include "bevdrive/env/environment.hpp"
#include "bevdrive/env/vec_env.hpp"
#include "bevdrive/experiments/harness.hpp"
#include "bevdrive/metrics/metrics.hpp"
#include "bevdrive/percep/percep.hpp"
#include "bevdrive/route/predictor.hpp"
#include "bevdrive/world/town_io.hpp"

namespace fs = std::filesystem;
using namespace bevdrive;

namespace {

int cmd_gen_town(uint64_t seed, const world::TownSpec& spec, const std::string& out,
                 bool dump) {
  const world::TownMap town = world::generate_town(seed, spec);
  if (!out.empty()) {
    world::save_town(town, out);
    std::cout << "wrote " << out << " (" << town.lanes.size() << " lanes, "
              << town.lights.size() << " lights)\n";
  }
  if (dump) std::cout << world::dump_town_text(town);
  return 0;
}

int cmd_render_bev(const std::string& town_file, const std::string& pose_str,
                   const std::string& out_dir, int traffic, int pedestrians, uint64_t seed,
                   int settle_steps) {
  const auto town = std::make_shared<world::TownMap>(world::load_town(town_file));
  double x = 0, y = 0, h = 0;
  if (std::sscanf(pose_str.c_str(), "%lf,%lf,%lf", &x, &y, &h) != 3) {
    std::cerr << "--pose expects X,Y,H\n";
    return 2;
  }
  world::WorldConfig wcfg;
  wcfg.traffic_count = traffic;
  wcfg.pedestrian_count = pedestrians;
  world::World w(town, wcfg, seed);
  w.populate(0);
  w.ego().pose = {x, y, h};
  for (int i = 0; i < settle_steps; ++i) w.step({0, 0, 0});
  w.ego().pose = {x, y, h};

  bev::HistoryBuffer history(4);
  history.reset(bev::make_snapshot(w));

  bev::Grid road, lanes, route_mask;
  bev::render_static_channels(*town, w.index(), w.ego().pose, &road, &lanes);
  bev::ObservationComposer composer(VariantId::Expert);
  bev::ObservationComposer::Inputs in;
  in.road = &road;
  in.lane_lines = &lanes;
  in.route_mask = &route_mask;  // no mission: empty desired-route channel
  in.history = &history;
  in.lights = &w.lights();
  in.measurement = bev::make_measurement(w.ego());
  bev::Observation obs;
  composer.compose(in, w.ego().pose, &obs);

  fs::create_directories(out_dir);
  for (int ch = 0; ch < bev::kChannelCount; ++ch) {
    const fs::path path = fs::path(out_dir) / (std::string(bev::channel_file_name(ch)) + ".pgm");
    bev::write_pgm(obs.channels[static_cast<size_t>(ch)], path.string());
  }
  bev::write_observation_png(obs, (fs::path(out_dir) / "preview.png").string());
  std::cout << "wrote 15 channel PGMs and preview.png to " << out_dir << "\n";
  return 0;
}

int cmd_routegen(bool do_train, bool do_eval, const std::string& data_file,
                 const std::string& model_file, int samples, int epochs, double iou_threshold,
                 bool straight_only, uint64_t seed) {
  route::RouteDataset dataset;
  if (!data_file.empty() && fs::exists(data_file)) {
    dataset = route::RouteDataset::load(data_file);
    std::cout << "loaded " << dataset.records.size() << " records from " << data_file << "\n";
  } else {
    route::DatasetGenConfig gen;
    gen.samples = samples;
    gen.seed = seed;
    gen.straight_lanes_only = straight_only;
    gen.town_spec.lane_width = 4.0;
    gen.town_spec.box_clearance_m = 4.0;
    dataset = route::generate_route_dataset(gen);
    std::cout << "generated " << dataset.records.size() << " records\n";
    if (!data_file.empty()) {
      dataset.save(data_file);
      std::cout << "wrote " << data_file << "\n";
    }
  }

  if (do_train) {
    route::RoutePredictor model({}, seed);
    route::TrainConfig tc;
    tc.epochs = epochs;
    route::train_route_predictor(&model, dataset, tc, [](int epoch, float loss, double iou) {
      std::printf("epoch %2d  loss %.4f  val-iou %.3f\n", epoch, loss, iou);
    });
    model.save(model_file);
    std::cout << "wrote " << model_file << "\n";
  }
  if (do_eval) {
    const auto model = route::RoutePredictor::load(model_file);
    const size_t n = dataset.records.size();
    const double iou = route::evaluate_route_predictor(*model, dataset, 0, n, iou_threshold);
    std::printf("mean IoU over %zu records at threshold %.2f: %.4f\n", n, iou_threshold, iou);
  }
  return 0;
}

int cmd_eval(const std::string& config_file, const std::string& out_dir) {
  Config cfg = config_file.empty() ? Config{} : Config::from_file(config_file);
  if (!out_dir.empty()) cfg.set("study.out_dir", out_dir);
  const auto h = experiments::HarnessConfig::from_config(cfg);
  const auto runs = experiments::load_existing_summaries(h);
  if (runs.empty()) {
    std::cerr << "no completed runs under " << h.out_dir << "\n";
    return 1;
  }
  experiments::write_report(h, runs);
  std::printf("%-22s %14s %14s %14s\n", "variant", "DS", "RC", "IS");
  for (int v = 0; v <= static_cast<int>(VariantId::MeasurementFlagStop); ++v) {
    std::vector<double> ds, rc, is;
    for (const auto& r : runs) {
      if (r.variant == static_cast<VariantId>(v)) {
        ds.push_back(r.ds_mean);
        rc.push_back(r.rc_mean);
        is.push_back(r.is_mean);
      }
    }
    if (ds.empty()) continue;
    const auto a = metrics::aggregate_seeds(ds);
    const auto b = metrics::aggregate_seeds(rc);
    const auto c = metrics::aggregate_seeds(is);
    std::printf("%-22s %6.3f +-%5.3f %6.3f +-%5.3f %6.3f +-%5.3f\n",
                variant_name(static_cast<VariantId>(v)), a.mean, a.stddev, b.mean, b.stddev,
                c.mean, c.stddev);
  }
  std::cout << "report: " << (fs::path(h.out_dir) / "report.csv").string() << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_file, const std::string& variant_filter, int seeds,
               const std::string& out_dir, bool check_only) {
  Config cfg = config_file.empty() ? Config{} : Config::from_file(config_file);
  if (seeds > 0) cfg.set("study.seeds", std::to_string(seeds));
  if (!out_dir.empty()) cfg.set("study.out_dir", out_dir);
  const auto h = experiments::HarnessConfig::from_config(cfg);

  std::vector<VariantId> variants;
  if (!variant_filter.empty()) {
    variants.push_back(variant_from_name(variant_filter));
  } else {
    for (int v = 0; v <= static_cast<int>(VariantId::MeasurementFlagStop); ++v) {
      variants.push_back(static_cast<VariantId>(v));
    }
  }

  std::vector<experiments::RunSummary> runs;
  if (!check_only) {
    for (const VariantId v : variants) {
      std::fprintf(stderr, "[ablate] variant %s\n", variant_name(v));
      const auto batch = experiments::run_variant(h, v);
      runs.insert(runs.end(), batch.begin(), batch.end());
    }
  }
  const auto all = experiments::load_existing_summaries(h);
  experiments::write_report(h, all);

  const auto checks = experiments::check_orderings(all);
  bool all_passed = true;
  for (const auto& c : checks) {
    std::printf("[%s] %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    all_passed &= c.passed;
  }
  return check_only && !all_passed ? 1 : 0;
}

int cmd_replay(const std::string& log_file) {
  std::ifstream in(log_file);
  if (!in) {
    std::cerr << "cannot open " << log_file << "\n";
    return 2;
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) {
    std::cerr << "empty log\n";
    return 2;
  }
  const auto header = nlohmann::json::parse(lines[0]);
  if (header.at("type") != "header") {
    std::cerr << "first record is not a header\n";
    return 2;
  }
  const env::Scenario scenario = env::scenario_from_json(header.at("scenario").dump());
  const uint64_t seed = header.at("seed").get<uint64_t>();

  std::vector<std::string> replayed;
  env::Environment e;
  e.set_log_sink([&](const std::string& l) { replayed.push_back(l); });
  e.reset(scenario, seed);
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto rec = nlohmann::json::parse(lines[i]);
    if (rec.at("type") != "step") continue;
    world::Action a;
    a.steer = rec.at("action").at(0).get<double>();
    a.throttle = rec.at("action").at(1).get<double>();
    a.brake = rec.at("action").at(2).get<double>();
    e.step(a);
  }
  if (replayed.size() != lines.size()) {
    std::cerr << "replay produced " << replayed.size() << " records, log has " << lines.size()
              << "\n";
    return 1;
  }
  for (size_t i = 0; i < lines.size(); ++i) {
    if (replayed[i] != lines[i]) {
      std::cerr << "mismatch at record " << i << "\n  log:    " << lines[i]
                << "\n  replay: " << replayed[i] << "\n";
      return 1;
    }
  }
  std::cout << "replay matches: " << lines.size() << " records bit-exact\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bevdrive: BEV state-representation workbench"};
  app.require_subcommand(1);

  // gen-town
  auto* gen = app.add_subcommand("gen-town", "generate a procedural town");
  uint64_t gen_seed = 1;
  world::TownSpec spec;
  std::string gen_out;
  bool gen_dump = false;
  gen->add_option("--seed", gen_seed);
  gen->add_option("--rows", spec.grid_rows);
  gen->add_option("--cols", spec.grid_cols);
  gen->add_option("--block", spec.block_m);
  gen->add_option("--lane-width", spec.lane_width);
  gen->add_option("--lanes", spec.lanes);
  gen->add_option("--junction-fraction", spec.junction_fraction);
  gen->add_option("--clearance", spec.box_clearance_m);
  gen->add_option("--out", gen_out);
  gen->add_flag("--dump", gen_dump, "print a human-readable dump");

  // render-bev
  auto* render = app.add_subcommand("render-bev", "rasterize the 15 BEV channels at a pose");
  std::string rb_town, rb_pose = "0,0,0", rb_out = "bev_out";
  int rb_traffic = 0, rb_peds = 0, rb_settle = 0;
  uint64_t rb_seed = 1;
  render->add_option("--town", rb_town)->required();
  render->add_option("--pose", rb_pose, "X,Y,H");
  render->add_option("--out", rb_out);
  render->add_option("--traffic", rb_traffic);
  render->add_option("--pedestrians", rb_peds);
  render->add_option("--seed", rb_seed);
  render->add_option("--settle-steps", rb_settle, "simulate this many steps first");

  // routegen
  auto* rg = app.add_subcommand("routegen", "route-predictor data/train/eval");
  bool rg_train = false, rg_eval = false, rg_straight = false;
  std::string rg_data, rg_model = "route_predictor.bvdc";
  int rg_samples = 10000, rg_epochs = 12;
  double rg_thresh = 0.5;
  uint64_t rg_seed = 99;
  rg->add_flag("--train", rg_train);
  rg->add_flag("--eval", rg_eval);
  rg->add_flag("--straight-only", rg_straight, "single-straight-lane scenes");
  rg->add_option("--data", rg_data, "dataset file (generated when absent)");
  rg->add_option("--model", rg_model);
  rg->add_option("--samples", rg_samples);
  rg->add_option("--epochs", rg_epochs);
  rg->add_option("--iou-threshold", rg_thresh);
  rg->add_option("--seed", rg_seed);

  // eval
  auto* ev = app.add_subcommand("eval", "print the study table from run summaries");
  std::string ev_config, ev_out;
  ev->add_option("--config", ev_config);
  ev->add_option("--runs", ev_out, "study output directory");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and evaluate state-representation variants");
  std::string ab_config, ab_variant, ab_out;
  int ab_seeds = 0;
  bool ab_check = false;
  ab->add_option("--config", ab_config);
  ab->add_option("--variant", ab_variant, "run only this variant");
  ab->add_option("--seeds", ab_seeds);
  ab->add_option("--out", ab_out);
  ab->add_flag("--check", ab_check, "only evaluate ordering checks on existing runs");

  // replay
  auto* rp = app.add_subcommand("replay", "re-run a logged episode and verify bit-exactness");
  std::string rp_log;
  rp->add_option("--log", rp_log)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_town(gen_seed, spec, gen_out, gen_dump);
    if (render->parsed())
      return cmd_render_bev(rb_town, rb_pose, rb_out, rb_traffic, rb_peds, rb_seed, rb_settle);
    if (rg->parsed())
      return cmd_routegen(rg_train, rg_eval, rg_data, rg_model, rg_samples, rg_epochs, rg_thresh,
                          rg_straight, rg_seed);
    if (ev->parsed()) return cmd_eval(ev_config, ev_out);
    if (ab->parsed()) return cmd_ablate(ab_config, ab_variant, ab_seeds, ab_out, ab_check);
    if (rp->parsed()) return cmd_replay(rp_log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
