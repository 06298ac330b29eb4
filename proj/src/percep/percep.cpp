#include "bevdrive/percep/percep.hpp"

#include <algorithm>
#include <cmath>

#include "bevdrive/kern/kernels.hpp"

namespace bevdrive::percep {

double iou(const uint8_t* a, const uint8_t* b, size_t n) {
  uint64_t inter = 0, uni = 0;
  kern::ops().mask_counts(a, b, n, &inter, &uni);
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double iou(const bev::Grid& a, const bev::Grid& b) {
  return iou(a.data(), b.data(), a.cells.size());
}

namespace {

// Candidate cells ordered by distance from the mask boundary so the flip
// budget eats progressively deeper rings.
struct NoiseCandidates {
  std::vector<std::vector<int>> erode_layers;   // mask cells, depth 1..kDepth
  std::vector<std::vector<int>> dilate_layers;  // background cells near mask
  size_t erode_total = 0;
  size_t dilate_total = 0;
};

constexpr int kErodeDepth = 4;
constexpr int kDilateDepth = 2;

NoiseCandidates boundary_layers(const bev::Grid& mask) {
  NoiseCandidates out;
  const int n = bev::kGridSize;
  std::vector<int8_t> depth(mask.cells.size(), 0);  // BFS ring index, signed by side
  std::vector<int> frontier;
  // Seed: cells adjacent to the opposite value.
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const uint8_t v = mask.at(r, c);
      bool boundary = false;
      for (const auto& [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        const int rr = r + dr, cc = c + dc;
        const uint8_t nb = (rr < 0 || rr >= n || cc < 0 || cc >= n) ? 0 : mask.at(rr, cc);
        if (nb != v) boundary = true;
      }
      if (boundary) {
        depth[static_cast<size_t>(r * n + c)] = v ? 1 : -1;
        frontier.push_back(r * n + c);
      }
    }
  }
  const int max_depth = std::max(kErodeDepth, kDilateDepth);
  out.erode_layers.resize(kErodeDepth);
  out.dilate_layers.resize(kDilateDepth);
  for (int d = 1; d <= max_depth && !frontier.empty(); ++d) {
    std::vector<int> next;
    for (int idx : frontier) {
      const int8_t side = depth[static_cast<size_t>(idx)];
      const bool on_mask = side > 0;
      if (on_mask && d <= kErodeDepth) out.erode_layers[static_cast<size_t>(d - 1)].push_back(idx);
      if (!on_mask && d <= kDilateDepth)
        out.dilate_layers[static_cast<size_t>(d - 1)].push_back(idx);
      const int r = idx / n, c = idx % n;
      for (const auto& [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= n || cc < 0 || cc >= n) continue;
        const int nidx = rr * n + cc;
        if (depth[static_cast<size_t>(nidx)] != 0) continue;
        if (mask.cells[static_cast<size_t>(nidx)] != (on_mask ? 1 : 0)) continue;
        depth[static_cast<size_t>(nidx)] = static_cast<int8_t>(on_mask ? d + 1 : -(d + 1));
        next.push_back(nidx);
      }
    }
    frontier = std::move(next);
  }
  for (const auto& l : out.erode_layers) out.erode_total += l.size();
  for (const auto& l : out.dilate_layers) out.dilate_total += l.size();
  return out;
}

// Applies a fixed flip budget, consuming shallow rings first (shuffled
// within each ring so the erosion looks ragged, not concentric).
bev::Grid apply_noise(const bev::Grid& src, const NoiseCandidates& cand, size_t erode_n,
                      size_t dilate_n, size_t salt_n, uint64_t seed) {
  Rng rng(seed);
  bev::Grid out = src;
  auto consume = [&](const std::vector<std::vector<int>>& layers, size_t budget, uint8_t value) {
    for (const auto& layer : layers) {
      if (budget == 0) break;
      if (budget >= layer.size()) {
        for (int idx : layer) out.cells[static_cast<size_t>(idx)] = value;
        budget -= layer.size();
        continue;
      }
      std::vector<int> pool = layer;
      for (size_t i = 0; i < budget; ++i) {
        const size_t j = i + rng.uniform_int(pool.size() - i);
        std::swap(pool[i], pool[j]);
        out.cells[static_cast<size_t>(pool[i])] = value;
      }
      budget = 0;
    }
  };
  consume(cand.erode_layers, erode_n, 0);
  consume(cand.dilate_layers, dilate_n, 1);
  for (size_t i = 0; i < salt_n; ++i) {
    const size_t idx = rng.uniform_int(out.cells.size());
    out.cells[idx] ^= 1;
  }
  return out;
}

}  // namespace

DegradeResult degrade_to_iou(const bev::Grid& mask, const DegradationProfile& profile,
                             double deviation_m, Rng& rng) {
  DegradeResult res;
  res.mask = mask;
  const double penalty = 1.0 + profile.ood_multiplier * std::min(deviation_m / 2.0, 1.0) * 0.5;
  const double effective = profile.target_iou / penalty;
  constexpr double kTol = 0.02;

  if (effective >= 1.0 - 1e-12) {
    res.achieved_iou = 1.0;
    return res;
  }

  const NoiseCandidates cand = boundary_layers(mask);
  if (cand.erode_total == 0 && cand.dilate_total == 0) {
    // Empty (or full) mask: flips cannot trade boundary quality, so the
    // target is unattainable.
    res.unattainable = true;
    return res;
  }

  const uint64_t base_seed = rng.next_u64();
  double lo = 0.0, hi = 1.0;
  double best_err = 1e9;
  for (int iter = 0; iter < 40; ++iter) {
    const double m = 0.5 * (lo + hi);
    const size_t erode_n = static_cast<size_t>(std::lround(m * cand.erode_total));
    const size_t dilate_n = static_cast<size_t>(std::lround(m * 0.7 * cand.dilate_total));
    const size_t salt_n = static_cast<size_t>(std::lround(m * 0.002 * mask.cells.size()));
    bev::Grid trial = apply_noise(mask, cand, erode_n, dilate_n, salt_n,
                                  base_seed + static_cast<uint64_t>(iter) * 0x9e3779b9ull);
    const double achieved = iou(mask, trial);
    const double err = std::abs(achieved - effective);
    if (err < best_err) {
      best_err = err;
      res.mask = std::move(trial);
      res.achieved_iou = achieved;
    }
    if (err <= kTol * 0.5) break;
    if (achieved > effective) {
      lo = m;
    } else {
      hi = m;
    }
  }
  if (best_err > kTol) res.unattainable = true;
  return res;
}

bool StopClassifierSim::simulate(bool ground_truth, Rng& rng) {
  const double u = rng.uniform01();
  const double hit = rng.uniform01();
  bool decision;
  if (ground_truth) {
    decision = hit < cfg_.tpr;
  } else {
    decision = hit < cfg_.fpr;
  }
  // Latent probability consistent with the thresholded decision.
  last_prob_ = decision ? cfg_.threshold + (1.0 - cfg_.threshold) * u : cfg_.threshold * u;

  if (pending_.empty()) {
    pending_.assign(static_cast<size_t>(cfg_.latency_steps) + 1, decision);
  } else {
    pending_.push_back(decision);
  }
  const bool out = pending_.front();
  pending_.pop_front();
  return out;
}

}  // namespace bevdrive::percep
