#pragma once

#include <deque>

#include "bevdrive/bev/grid.hpp"
#include "bevdrive/rng.hpp"

namespace bevdrive::percep {

// Intersection-over-union of two equal-shaped binary masks; 1.0 when both
// are empty.
double iou(const uint8_t* a, const uint8_t* b, size_t n);
double iou(const bev::Grid& a, const bev::Grid& b);

// Emulates the measured quality of an offline-trained BEV segmentation
// model: the mask is noised until its IoU against the clean render matches
// the calibration target, degraded further as the ego leaves the training
// distribution (lateral deviation from the route).
struct DegradationProfile {
  double target_iou = 0.9;      // in (0, 1]
  double ood_multiplier = 1.0;  // >= 1, scales deviation-dependent loss
};

struct DegradeResult {
  bev::Grid mask;
  double achieved_iou = 1.0;
  bool unattainable = false;
};

// Boundary erosion/dilation plus salt-and-pepper flips, with the flip budget
// bisected until iou(original, degraded) lands within +-0.02 of
// target / (1 + multiplier * min(deviation / 2, 1) * 0.5).
// Deterministic in the generator state.
DegradeResult degrade_to_iou(const bev::Grid& mask, const DegradationProfile& profile,
                             double deviation_m, Rng& rng);

// Simulated stop-zone classifier: draws a latent probability calibrated so
// thresholding reproduces the configured TPR/FPR, then delays the decision.
struct StopClassifierConfig {
  double tpr = 0.95;
  double fpr = 0.02;
  double threshold = 0.4;
  int latency_steps = 0;
};

class StopClassifierSim {
 public:
  explicit StopClassifierSim(StopClassifierConfig cfg = {}) : cfg_(cfg) {}

  bool simulate(bool ground_truth, Rng& rng);
  double last_probability() const { return last_prob_; }
  void reset() { pending_.clear(); }
  const StopClassifierConfig& config() const { return cfg_; }

 private:
  StopClassifierConfig cfg_;
  std::deque<bool> pending_;
  double last_prob_ = 0.0;
};

}  // namespace bevdrive::percep
