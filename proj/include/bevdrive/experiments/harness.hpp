#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bevdrive/config.hpp"
#include "bevdrive/env/vec_env.hpp"
#include "bevdrive/metrics/metrics.hpp"
#include "bevdrive/rl/ppo.hpp"
#include "bevdrive/variant.hpp"

namespace bevdrive::experiments {

// One ablation study: identical environment, training scheme, and evaluation
// scenarios across the state-representation variants.
struct HarnessConfig {
  std::string out_dir = "runs";
  int seeds = 3;
  int64_t budget_steps = 300000;
  int64_t predicted_route_budget_multiplier = 2;
  int eval_episodes = 10;
  uint64_t eval_scenario_base = 900000;
  uint64_t train_scenario_base = 1000;
  uint64_t eval_env_seed_base = 5000;
  int jobs = 1;

  env::ScenarioParams scenario;  // shared by every variant
  env::EnvConfig env;
  rl::PpoConfig ppo;
  int policy_pool = 8;
  std::vector<int> policy_conv = {16, 24, 32, 48};
  int policy_trunk = 128;
  int policy_meas_embed = 16;
  float policy_init_log_std = -1.0f;

  std::string predictor_checkpoint = "";  // trained on demand when empty
  int predictor_samples = 10000;
  int predictor_epochs = 12;

  static HarnessConfig from_config(const Config& cfg);
};

struct RunSummary {
  VariantId variant = VariantId::Expert;
  int seed_index = 0;
  double ds_mean = 0.0;
  double rc_mean = 0.0;
  double is_mean = 0.0;
  double return_mean = 0.0;
  int eval_episodes = 0;
  int64_t budget_steps = 0;
  double train_seconds = 0.0;
};

// Trains and evaluates one (variant, seed). Reuses the persisted summary when
// the run already completed with the same budget (idempotent resume).
RunSummary run_single(const HarnessConfig& cfg, VariantId variant, int seed_index);

// All seeds of one variant (parallel when cfg.jobs > 1).
std::vector<RunSummary> run_variant(const HarnessConfig& cfg, VariantId variant);

// Ensures a trained route-predictor checkpoint exists; returns its path.
std::string ensure_route_predictor(const HarnessConfig& cfg);

// report.csv: one row per run plus per-variant aggregates.
void write_report(const HarnessConfig& cfg, const std::vector<RunSummary>& runs);
std::vector<RunSummary> load_existing_summaries(const HarnessConfig& cfg);

struct OrderingCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = false;
  std::string detail;
};

// The relative-ordering acceptance checks over per-variant median DS.
std::vector<OrderingCheck> check_orderings(const std::vector<RunSummary>& runs);

double median_ds(const std::vector<RunSummary>& runs, VariantId variant);

}  // namespace bevdrive::experiments
