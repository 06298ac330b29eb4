#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bevdrive/env/environment.hpp"
#include "bevdrive/env/vec_env.hpp"

using namespace bevdrive;
using namespace bevdrive::env;

namespace {

ScenarioParams small_params(VariantId variant = VariantId::Expert) {
  ScenarioParams p;
  p.town_spec.grid_rows = 2;
  p.town_spec.grid_cols = 2;
  p.town_spec.block_m = 56.0;
  p.town_spec.junction_fraction = 1.0;
  p.mission_length_m = 100.0;
  p.traffic_count = 2;
  p.pedestrian_count = 0;
  p.step_limit = 300;
  p.variant = variant;
  return p;
}

}  // namespace

TEST_CASE("reset: determinism and channel count") {
  const Scenario scenario = make_random_scenario(7, small_params());
  Environment a, b;
  const auto& obs_a = a.reset(scenario, 42);
  const auto& obs_b = b.reset(scenario, 42);
  CHECK(obs_a.hash() == obs_b.hash());
  CHECK(obs_a.channels.size() == 15);
  CHECK(obs_a.measurements.size() == 6);

  // A different seed shuffles the traffic even when it spawns out of view.
  Environment c;
  c.reset(scenario, 43);
  CHECK(a.world_state_hash() != c.world_state_hash());
}

TEST_CASE("reset: straight two-waypoint mission plans ~50 m") {
  // Mission with two fixes 50 m apart along one road.
  ScenarioParams p = small_params();
  p.town_spec.junction_fraction = 0.0;  // ring
  const Scenario base = make_random_scenario(3, p);
  Scenario s = base;
  // spawn at a known lane position and a waypoint 50 m down the same lane
  const auto town = world::generate_town(s.town_seed, s.town_spec);
  const world::LaneSegment* lane = nullptr;
  for (const auto& l : town.lanes) {
    if (l.junction_id < 0 && l.length > 52.0) {
      lane = &l;
      break;
    }
  }
  REQUIRE(lane != nullptr);
  const Vec2 start = lane->point_at(1.0);
  const Vec2 end = lane->point_at(51.0);
  s.mission = {route::gnss_from_world(start), route::gnss_from_world(end)};
  Environment env;
  env.reset(s, 1);
  // the planned route is reachable through the scenario interface only via
  // progress; drive straight and expect completion near 50 m
  double last_progress = 0.0;
  for (int i = 0; i < 299 && !env.done(); ++i) {
    const auto res = env.step(0.0, 0.6);
    last_progress = res.progress_m;
  }
  CHECK(last_progress == doctest::Approx(50.0).epsilon(0.05));
}

TEST_CASE("step: zero action from rest gives small negative reward, no progress") {
  const Scenario scenario = make_random_scenario(11, small_params());
  Environment env;
  env.reset(scenario, 5);
  const auto res = env.step(0.0, 0.0);
  CHECK(res.progress_m == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(res.reward < 0.0);        // speed-tracking penalty at rest
  CHECK(res.reward > -1.0);       // but small
  CHECK(!res.done);
}

TEST_CASE("step after done throws") {
  ScenarioParams p = small_params();
  p.step_limit = 3;
  const Scenario scenario = make_random_scenario(13, p);
  Environment env;
  env.reset(scenario, 5);
  while (!env.done()) env.step(0.0, 0.0);
  CHECK_THROWS_AS(env.step(0.0, 0.0), std::logic_error);
  CHECK(env.episode_metrics().count(world::InfractionKind::Timeout) >= 1);
}

TEST_CASE("variant neutrality: world trajectories identical across variants") {
  std::vector<uint64_t> hashes;
  for (const VariantId v : {VariantId::Expert, VariantId::NoStatic, VariantId::TargetHeatmap,
                            VariantId::GtBinaryStop, VariantId::MeasurementFlagStop,
                            VariantId::StaticPredicted}) {
    Scenario scenario = make_random_scenario(17, small_params(v));
    Environment env;
    env.reset(scenario, 9);
    Rng action_rng(31);
    uint64_t h = 0;
    for (int i = 0; i < 120 && !env.done(); ++i) {
      env.step(action_rng.uniform(-0.2, 0.2), action_rng.uniform(0.0, 0.7));
      h ^= env.world_state_hash() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    hashes.push_back(h);
  }
  for (size_t i = 1; i < hashes.size(); ++i) CHECK(hashes[i] == hashes[0]);
}

TEST_CASE("observation variants differ where they should") {
  auto observe = [&](VariantId v) {
    Scenario scenario = make_random_scenario(19, small_params(v));
    Environment env;
    env.reset(scenario, 3);
    env.step(0.0, 0.5);
    return env.observation();
  };
  const auto expert = observe(VariantId::Expert);
  const auto no_static = observe(VariantId::NoStatic);
  CHECK(no_static.channels[bev::kChRoad].count() == 0);
  CHECK(no_static.channels[bev::kChLanes].count() == 0);
  CHECK(bev::grid_hash(no_static.channels[bev::kChRoute]) ==
        bev::grid_hash(expert.channels[bev::kChRoute]));

  const auto heat = observe(VariantId::TargetHeatmap);
  CHECK(heat.has_real_channel1);
  CHECK(heat.channels[bev::kChRoute].count() == 0);

  const auto flag = observe(VariantId::MeasurementFlagStop);
  CHECK(flag.measurements.size() == 7);

  const auto degraded = observe(VariantId::StaticPredicted);
  CHECK(bev::grid_hash(degraded.channels[bev::kChRoad]) !=
        bev::grid_hash(expert.channels[bev::kChRoad]));
  const double overlap =
      percep::iou(degraded.channels[bev::kChRoad], expert.channels[bev::kChRoad]);
  CHECK(overlap > 0.80);
  CHECK(overlap < 0.97);
}

TEST_CASE("episode replay reproduces the log byte for byte") {
  ScenarioParams p = small_params();
  p.step_limit = 120;
  const Scenario scenario = make_random_scenario(23, p);

  auto run = [&](std::vector<std::string>* log, std::vector<std::array<double, 2>>* actions) {
    Environment env;
    env.set_log_sink([log](const std::string& line) { log->push_back(line); });
    env.reset(scenario, 77);
    Rng rng(55);
    while (!env.done()) {
      const double steer = rng.uniform(-0.3, 0.3);
      const double accel = rng.uniform(0.0, 0.8);
      if (actions) actions->push_back({steer, accel});
      env.step(steer, accel);
    }
  };

  std::vector<std::string> log1, log2;
  std::vector<std::array<double, 2>> actions;
  run(&log1, &actions);

  // Replay with the recorded action stream.
  Environment env;
  env.set_log_sink([&log2](const std::string& line) { log2.push_back(line); });
  env.reset(scenario, 77);
  for (const auto& a : actions) {
    REQUIRE(!env.done());
    env.step(a[0], a[1]);
  }
  CHECK(env.done());
  REQUIRE(log1.size() == log2.size());
  for (size_t i = 0; i < log1.size(); ++i) REQUIRE(log1[i] == log2[i]);

  // Scenario serialization round-trips through JSON.
  const Scenario back = scenario_from_json(scenario_to_json(scenario));
  CHECK(back.town_seed == scenario.town_seed);
  CHECK(back.mission.size() == scenario.mission.size());
  CHECK(back.variant == scenario.variant);
  CHECK(scenario_to_json(back) == scenario_to_json(scenario));
}

TEST_CASE("vec env: pooled observations and episode bookkeeping") {
  DrivingVecEnv::Config cfg;
  cfg.scenario = small_params();
  cfg.scenario.step_limit = 40;
  cfg.num_envs = 2;
  cfg.pool = 8;
  DrivingVecEnv venv(cfg);
  CHECK(venv.grid_side() == 24);
  CHECK(venv.meas_dim() == 6);

  std::vector<float> bev(static_cast<size_t>(venv.num_envs()) * venv.bev_dim());
  std::vector<float> meas(static_cast<size_t>(venv.num_envs()) * venv.meas_dim());
  venv.reset_all(bev.data(), meas.data());
  float mx = 0;
  for (float v : bev) mx = std::max(mx, v);
  CHECK(mx > 0.0f);  // road visible in pooled planes
  int dones = 0;
  for (int t = 0; t < 90; ++t) {
    for (int e = 0; e < venv.num_envs(); ++e) {
      const float action[2] = {0.0f, 0.3f};
      const auto info = venv.step(e, action, bev.data() + static_cast<size_t>(e) * venv.bev_dim(),
                                  meas.data() + static_cast<size_t>(e) * venv.meas_dim());
      dones += info.done;
    }
  }
  CHECK(dones >= 2);  // step_limit 40 forces at least two resets per env
}
