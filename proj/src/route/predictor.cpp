#include "bevdrive/route/predictor.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>

#include "bevdrive/bev/raster.hpp"
#include "bevdrive/kern/kernels.hpp"
#include "bevdrive/nn/checkpoint.hpp"
#include "bevdrive/nn/loss.hpp"
#include "bevdrive/percep/percep.hpp"
#include "bevdrive/serial.hpp"
#include "bevdrive/world/town_gen.hpp"

namespace bevdrive::route {

namespace {

// (B, D, S, S) feature map <-> (B, S*S, D) token rows.
nn::Tensor to_tokens(const nn::Tensor& fmap) {
  const int b = fmap.dim(0), d = fmap.dim(1), s = fmap.dim(2);
  nn::Tensor tokens({b, s * s, d});
  for (int n = 0; n < b; ++n) {
    const float* src = fmap.ptr() + static_cast<size_t>(n) * d * s * s;
    float* dst = tokens.ptr() + static_cast<size_t>(n) * s * s * d;
    for (int c = 0; c < d; ++c) {
      for (int p = 0; p < s * s; ++p) {
        dst[static_cast<size_t>(p) * d + c] = src[static_cast<size_t>(c) * s * s + p];
      }
    }
  }
  return tokens;
}

nn::Tensor from_tokens(const nn::Tensor& tokens, int side) {
  const int b = tokens.dim(0), p_count = tokens.dim(1), d = tokens.dim(2);
  nn::Tensor fmap({b, d, side, side});
  for (int n = 0; n < b; ++n) {
    const float* src = tokens.ptr() + static_cast<size_t>(n) * p_count * d;
    float* dst = fmap.ptr() + static_cast<size_t>(n) * d * p_count;
    for (int c = 0; c < d; ++c) {
      for (int p = 0; p < p_count; ++p) {
        dst[static_cast<size_t>(c) * p_count + p] = src[static_cast<size_t>(p) * d + c];
      }
    }
  }
  return fmap;
}

}  // namespace

RoutePredictor::RoutePredictor(const PredictorConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      enc1_(2, 32, 3, 2, 1),
      enc2_(32, cfg.embed_dim, 3, 3, 0),
      token_attn_(cfg.embed_dim, cfg.heads),
      wp1_(2, cfg.embed_dim),
      wp2_(cfg.embed_dim, cfg.embed_dim),
      cross_(cfg.embed_dim, cfg.heads),
      head1_(cfg.embed_dim * 2 + cfg.heads * cfg.waypoints, 48, 3, 1, 1),
      up2_(2),
      head2_(48, 32, 3, 1, 1),
      up3_(3),
      head3_(32, 16, 3, 1, 1),
      head_out_(16, 1, 1, 1, 0) {
  Rng rng(seed);
  enc1_.init(rng);
  enc2_.init(rng);
  token_attn_.init(rng);
  wp1_.init(rng);
  wp2_.init(rng);
  cross_.init(rng);
  head1_.init(rng);
  head2_.init(rng);
  head3_.init(rng);
  head_out_.init(rng);
}

nn::Tensor RoutePredictor::forward(const nn::Tensor& masks, const nn::Tensor& waypoints) {
  const int b = masks.dim(0);
  const int d = cfg_.embed_dim;
  const int ts = cfg_.token_side;
  const int n_tokens = ts * ts;
  const int n_wp = cfg_.waypoints;
  cached_batch_ = b;

  nn::Tensor e = enc2_act_.forward(enc2_.forward(enc1_act_.forward(enc1_.forward(masks))));
  nn::Tensor tokens = token_attn_.forward(to_tokens(e));

  nn::Tensor wp_flat({b * n_wp, 2});
  for (size_t i = 0; i < wp_flat.size(); ++i) {
    wp_flat.data[i] = waypoints.data[i] * cfg_.waypoint_scale;
  }
  nn::Tensor q = wp2_.forward(wp1_act_.forward(wp1_.forward(wp_flat)));
  q.reshape({b, n_wp, d});

  cached_cross_out_ = cross_.forward(q, tokens);
  const nn::Tensor& attn = cross_.attention();  // (B, h, n_wp, n_tokens)

  // Head input: token features + attention maps + broadcast mean of the
  // waypoint-conditioned cross-attention output.
  const int attn_ch = cfg_.heads * n_wp;
  nn::Tensor head_in({b, d + attn_ch + d, ts, ts});
  const nn::Tensor tokens2d = from_tokens(tokens, ts);
  for (int n = 0; n < b; ++n) {
    float* dst = head_in.ptr() + static_cast<size_t>(n) * head_in.dim(1) * n_tokens;
    std::memcpy(dst, tokens2d.ptr() + static_cast<size_t>(n) * d * n_tokens,
                sizeof(float) * d * n_tokens);
    // attention maps: one 8x8 plane per (head, waypoint)
    const float* a = attn.ptr() + static_cast<size_t>(n) * attn_ch * n_tokens;
    std::memcpy(dst + static_cast<size_t>(d) * n_tokens, a, sizeof(float) * attn_ch * n_tokens);
    const float* co = cached_cross_out_.ptr() + static_cast<size_t>(n) * n_wp * d;
    float* bc = dst + static_cast<size_t>(d + attn_ch) * n_tokens;
    for (int c = 0; c < d; ++c) {
      float mean = 0.0f;
      for (int w = 0; w < n_wp; ++w) mean += co[static_cast<size_t>(w) * d + c];
      mean /= static_cast<float>(n_wp);
      for (int p = 0; p < n_tokens; ++p) bc[static_cast<size_t>(c) * n_tokens + p] = mean;
    }
  }

  nn::Tensor h = head1_act_.forward(head1_.forward(head_in));
  h = head2_act_.forward(head2_.forward(up2_.forward(h)));
  h = head3_act_.forward(head3_.forward(up3_.forward(h)));
  return out_act_.forward(head_out_.forward(h));
}

void RoutePredictor::backward(const nn::Tensor& d_pred) {
  const int b = cached_batch_;
  const int d = cfg_.embed_dim;
  const int ts = cfg_.token_side;
  const int n_tokens = ts * ts;
  const int n_wp = cfg_.waypoints;
  const int attn_ch = cfg_.heads * n_wp;

  nn::Tensor dh = head_out_.backward(out_act_.backward(d_pred));
  dh = up3_.backward(head3_.backward(head3_act_.backward(dh)));
  dh = up2_.backward(head2_.backward(head2_act_.backward(dh)));
  const nn::Tensor dhead_in = head1_.backward(head1_act_.backward(dh));

  // Split the concatenated gradient.
  nn::Tensor dtokens2d({b, d, ts, ts});
  nn::Tensor dattn({b, cfg_.heads, n_wp, n_tokens});
  nn::Tensor dcross({b, n_wp, d});
  for (int n = 0; n < b; ++n) {
    const float* src = dhead_in.ptr() + static_cast<size_t>(n) * dhead_in.dim(1) * n_tokens;
    std::memcpy(dtokens2d.ptr() + static_cast<size_t>(n) * d * n_tokens, src,
                sizeof(float) * d * n_tokens);
    std::memcpy(dattn.ptr() + static_cast<size_t>(n) * attn_ch * n_tokens,
                src + static_cast<size_t>(d) * n_tokens, sizeof(float) * attn_ch * n_tokens);
    const float* bc = src + static_cast<size_t>(d + attn_ch) * n_tokens;
    float* dc = dcross.ptr() + static_cast<size_t>(n) * n_wp * d;
    for (int c = 0; c < d; ++c) {
      float acc = 0.0f;
      for (int p = 0; p < n_tokens; ++p) acc += bc[static_cast<size_t>(c) * n_tokens + p];
      acc /= static_cast<float>(n_wp);
      for (int w = 0; w < n_wp; ++w) dc[static_cast<size_t>(w) * d + c] = acc;
    }
  }

  auto [dq, dtokens_cross] = cross_.backward(dcross, dattn);

  // Waypoint branch.
  nn::Tensor dq_flat = dq;
  dq_flat.reshape({b * n_wp, d});
  nn::Tensor dwp = wp1_.backward(wp1_act_.backward(wp2_.backward(dq_flat)));
  (void)dwp;  // waypoints are inputs, not parameters

  // Token branch: head path + cross-attention context path.
  nn::Tensor dtokens = to_tokens(dtokens2d);
  for (size_t i = 0; i < dtokens.size(); ++i) dtokens.data[i] += dtokens_cross.data[i];
  const nn::Tensor de = from_tokens(token_attn_.backward(dtokens), ts);
  enc1_.backward(enc1_act_.backward(enc2_.backward(enc2_act_.backward(de))));
}

std::vector<nn::ParamRef<float>> RoutePredictor::params() {
  std::vector<nn::ParamRef<float>> out;
  enc1_.collect_params("enc1", &out);
  enc2_.collect_params("enc2", &out);
  token_attn_.collect_params("token_attn", &out);
  wp1_.collect_params("wp1", &out);
  wp2_.collect_params("wp2", &out);
  cross_.collect_params("cross", &out);
  head1_.collect_params("head1", &out);
  head2_.collect_params("head2", &out);
  head3_.collect_params("head3", &out);
  head_out_.collect_params("head_out", &out);
  return out;
}

void RoutePredictor::zero_grad() {
  for (auto& p : params()) p.grad->fill(0.0f);
}

std::vector<nn::LayerSpec> RoutePredictor::specs() const {
  return {enc1_.spec(),  enc2_.spec(),  token_attn_.spec(), wp1_.spec(),
          wp2_.spec(),   cross_.spec(), head1_.spec(),      head2_.spec(),
          head3_.spec(), head_out_.spec()};
}

void RoutePredictor::save(const std::string& path) const {
  auto* self = const_cast<RoutePredictor*>(this);
  nn::save_checkpoint(path, specs(), self->params());
}

std::unique_ptr<RoutePredictor> RoutePredictor::load(const std::string& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  auto model = std::make_unique<RoutePredictor>();
  nn::restore_params(ckpt, model->params());
  return model;
}

void RoutePredictor::predict_route_grid(const bev::Grid& road, const bev::Grid& lanes,
                                        const WaypointSet& waypoints, double threshold,
                                        bev::Grid* out) const {
  auto* self = const_cast<RoutePredictor*>(this);
  const int side = cfg_.input_side;
  nn::Tensor masks({1, 2, side, side});
  kern::ops().pool_sum_u8(road.data(), bev::kGridSize, bev::kGridSize, 4, 1.0f / 16.0f,
                          masks.ptr());
  kern::ops().pool_sum_u8(lanes.data(), bev::kGridSize, bev::kGridSize, 4, 1.0f / 16.0f,
                          masks.ptr() + side * side);
  nn::Tensor wps({1, cfg_.waypoints, 2});
  for (int w = 0; w < cfg_.waypoints; ++w) {
    wps.data[static_cast<size_t>(w) * 2] = static_cast<float>(waypoints.points[static_cast<size_t>(w)].x);
    wps.data[static_cast<size_t>(w) * 2 + 1] =
        static_cast<float>(waypoints.points[static_cast<size_t>(w)].y);
  }
  const nn::Tensor pred = self->forward(masks, wps);
  out->clear();
  for (int r = 0; r < bev::kGridSize; ++r) {
    for (int c = 0; c < bev::kGridSize; ++c) {
      const float p = pred.data[static_cast<size_t>(r / 4) * side + (c / 4)];
      if (p >= threshold) out->set(r, c);
    }
  }
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

namespace {
constexpr char kDatasetMagic[4] = {'B', 'V', 'R', 'D'};
constexpr uint16_t kDatasetVersion = 1;
}  // namespace

void RouteDataset::save(const std::string& path) const {
  BinWriter w;
  w.magic(kDatasetMagic);
  w.u16(kDatasetVersion);
  w.u32(static_cast<uint32_t>(towns.size()));
  for (const TownKey& t : towns) {
    w.u64(t.seed);
    w.i32(t.spec.grid_rows);
    w.i32(t.spec.grid_cols);
    w.f64(t.spec.block_m);
    w.f64(t.spec.lane_width);
    w.i32(t.spec.lanes);
    w.f64(t.spec.junction_fraction);
    w.f64(t.spec.box_clearance_m);
    w.f64(t.spec.green_s);
    w.f64(t.spec.yellow_s);
    w.f64(t.spec.red_s);
  }
  w.u32(static_cast<uint32_t>(records.size()));
  for (const RouteDatasetRecord& r : records) {
    BinWriter rec;
    rec.i32(r.town_index);
    rec.f64(r.ego.x);
    rec.f64(r.ego.y);
    rec.f64(r.ego.heading);
    for (const Vec2& wp : r.waypoints_local) {
      rec.f64(wp.x);
      rec.f64(wp.y);
    }
    rec.bytes(r.oracle_mask.data(), r.oracle_mask.size());
    w.u32(static_cast<uint32_t>(rec.data().size()));
    w.bytes(rec.data().data(), rec.data().size());
  }
  w.write_file(path);
}

RouteDataset RouteDataset::load(const std::string& path) {
  BinReader r = BinReader::from_file(path);
  r.expect_magic(kDatasetMagic);
  if (r.u16() != kDatasetVersion) throw std::runtime_error("unsupported dataset version");
  RouteDataset ds;
  ds.towns.resize(r.u32());
  for (TownKey& t : ds.towns) {
    t.seed = r.u64();
    t.spec.grid_rows = r.i32();
    t.spec.grid_cols = r.i32();
    t.spec.block_m = r.f64();
    t.spec.lane_width = r.f64();
    t.spec.lanes = r.i32();
    t.spec.junction_fraction = r.f64();
    t.spec.box_clearance_m = r.f64();
    t.spec.green_s = r.f64();
    t.spec.yellow_s = r.f64();
    t.spec.red_s = r.f64();
  }
  ds.records.resize(r.u32());
  for (RouteDatasetRecord& rec : ds.records) {
    r.u32();
    rec.town_index = r.i32();
    rec.ego.x = r.f64();
    rec.ego.y = r.f64();
    rec.ego.heading = r.f64();
    for (Vec2& wp : rec.waypoints_local) {
      wp.x = r.f64();
      wp.y = r.f64();
    }
    r.bytes(rec.oracle_mask.data(), rec.oracle_mask.size());
  }
  return ds;
}

void dataset_inputs(const world::TownMap& town, const world::LaneIndex& index,
                    const RouteDatasetRecord& rec, float* masks_out) {
  bev::Grid road, lanes;
  bev::render_static_channels(town, index, rec.ego, &road, &lanes);
  kern::ops().pool_sum_u8(road.data(), bev::kGridSize, bev::kGridSize, 4, 1.0f / 16.0f,
                          masks_out);
  kern::ops().pool_sum_u8(lanes.data(), bev::kGridSize, bev::kGridSize, 4, 1.0f / 16.0f,
                          masks_out + 48 * 48);
}

RouteDataset generate_route_dataset(const DatasetGenConfig& cfg) {
  RouteDataset ds;
  Rng rng(cfg.seed);
  std::vector<world::TownMap> towns;
  std::vector<world::LaneIndex> indexes;
  for (int i = 0; i < cfg.town_count; ++i) {
    world::TownSpec spec = cfg.town_spec;
    if (cfg.straight_lanes_only) {
      spec.junction_fraction = 0.0;
    } else {
      spec.junction_fraction = 0.4 + 0.6 * rng.uniform01();
    }
    const uint64_t seed = cfg.seed * 1000 + static_cast<uint64_t>(i);
    ds.towns.push_back({seed, spec});
    towns.push_back(world::generate_town(seed, spec));
    indexes.emplace_back(towns.back());
  }

  int attempts = 0;
  while (static_cast<int>(ds.records.size()) < cfg.samples && attempts < cfg.samples * 20) {
    ++attempts;
    const int ti = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(towns.size())));
    const world::TownMap& town = towns[static_cast<size_t>(ti)];
    const auto& sp = town.spawn_points[rng.uniform_int(town.spawn_points.size())];
    const world::LaneSegment& lane = town.lane(sp.lane);
    const double s0 = rng.uniform(0.0, std::max(0.1, lane.length - 1.0));
    const Vec2 p = lane.point_at(s0);
    const Pose ego{p.x, p.y, lane.heading_at(s0)};

    // Mission walk: waypoints every 25 m along a random successor chain.
    std::vector<Vec2> waypoints;
    int32_t cur = sp.lane;
    double cs = s0;
    bool ok = true;
    for (int w = 0; w < 5; ++w) {
      double remaining = 25.0;
      while (remaining > 0.0) {
        const world::LaneSegment& l = town.lane(cur);
        const double avail = l.length - cs;
        if (avail >= remaining) {
          cs += remaining;
          remaining = 0.0;
        } else {
          remaining -= avail;
          if (l.successors.empty()) {
            if (cfg.straight_lanes_only) {
              // clamp to the lane end; the remaining waypoints repeat it
              cs = l.length;
              remaining = 0.0;
            } else {
              ok = false;
            }
            break;
          }
          cur = cfg.straight_lanes_only
                    ? l.successors.front()
                    : l.successors[rng.uniform_int(l.successors.size())];
          cs = 0.0;
        }
      }
      if (!ok) break;
      waypoints.push_back(town.lane(cur).point_at(cs));
      if (cfg.straight_lanes_only) cur = sp.lane;  // stay on the spawn lane
    }
    if (!ok || waypoints.empty()) continue;

    Route route;
    try {
      route = plan_shortest_path(town, indexes[static_cast<size_t>(ti)], {sp.lane, s0},
                                 waypoints);
    } catch (const PlanError&) {
      continue;
    }
    if (route.polyline.pts.size() < 2) continue;

    RouteDatasetRecord rec;
    rec.town_index = ti;
    rec.ego = ego;
    for (size_t w = 0; w < rec.waypoints_local.size(); ++w) {
      const Vec2& wp = waypoints[std::min(w, waypoints.size() - 1)];
      rec.waypoints_local[w] = ego.to_local(wp);
    }

    // Oracle: the route stroked wide at full resolution, max-pooled to 48.
    bev::Grid mask192;
    bev::stroke_polyline_world(&mask192, ego, route.polyline.pts, 2);
    rec.oracle_mask.fill(0);
    for (int r = 0; r < bev::kGridSize; ++r) {
      for (int c = 0; c < bev::kGridSize; ++c) {
        if (mask192.at(r, c)) rec.oracle_mask[static_cast<size_t>(r / 4) * 48 + (c / 4)] = 1;
      }
    }
    ds.records.push_back(rec);
  }
  return ds;
}

TrainReport train_route_predictor(RoutePredictor* model, const RouteDataset& dataset,
                                  const TrainConfig& cfg,
                                  const std::function<void(int, float, double)>& on_epoch) {
  TrainReport report;
  const auto t_start = std::chrono::steady_clock::now();
  const size_t n = dataset.records.size();
  const size_t val_n = std::max<size_t>(1, static_cast<size_t>(n * cfg.val_fraction));
  const size_t train_n = n - val_n;

  // Pre-render inputs once; pooled counts are exact in uint8.
  std::vector<world::TownMap> towns;
  std::vector<world::LaneIndex> indexes;
  for (const auto& key : dataset.towns) {
    towns.push_back(world::generate_town(key.seed, key.spec));
    indexes.emplace_back(towns.back());
  }
  const size_t plane = 2 * 48 * 48;
  std::vector<uint8_t> inputs_q(n * plane);
  std::vector<float> scratch(plane);
  for (size_t i = 0; i < n; ++i) {
    const auto& rec = dataset.records[i];
    dataset_inputs(towns[static_cast<size_t>(rec.town_index)],
                   indexes[static_cast<size_t>(rec.town_index)], rec, scratch.data());
    for (size_t j = 0; j < plane; ++j) {
      inputs_q[i * plane + j] = static_cast<uint8_t>(std::lround(scratch[j] * 16.0f));
    }
  }

  auto fill_batch = [&](const std::vector<size_t>& idx, size_t start, size_t count,
                        nn::Tensor* masks, nn::Tensor* wps, nn::Tensor* target) {
    *masks = nn::Tensor({static_cast<int>(count), 2, 48, 48});
    *wps = nn::Tensor({static_cast<int>(count), 5, 2});
    *target = nn::Tensor({static_cast<int>(count), 1, 48, 48});
    for (size_t s = 0; s < count; ++s) {
      const size_t i = idx[start + s];
      const auto& rec = dataset.records[i];
      const uint8_t* q = inputs_q.data() + i * plane;
      float* m = masks->ptr() + s * plane;
      for (size_t j = 0; j < plane; ++j) m[j] = static_cast<float>(q[j]) / 16.0f;
      for (int w = 0; w < 5; ++w) {
        wps->data[(s * 5 + static_cast<size_t>(w)) * 2] =
            static_cast<float>(rec.waypoints_local[static_cast<size_t>(w)].x);
        wps->data[(s * 5 + static_cast<size_t>(w)) * 2 + 1] =
            static_cast<float>(rec.waypoints_local[static_cast<size_t>(w)].y);
      }
      float* t = target->ptr() + s * static_cast<size_t>(48 * 48);
      for (size_t j = 0; j < static_cast<size_t>(48 * 48); ++j) {
        t[j] = rec.oracle_mask[j];
      }
    }
  };

  std::vector<size_t> order(train_n);
  for (size_t i = 0; i < train_n; ++i) order[i] = i;
  Rng rng(cfg.seed);
  nn::Adam opt({.lr = cfg.learning_rate});
  auto model_params = model->params();

  auto val_iou = [&]() {
    return evaluate_route_predictor(*model, dataset, train_n, n, 0.5);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }
    double loss_acc = 0.0;
    int batches = 0;
    for (size_t start = 0; start < train_n; start += static_cast<size_t>(cfg.batch_size)) {
      const size_t count = std::min<size_t>(static_cast<size_t>(cfg.batch_size), train_n - start);
      nn::Tensor masks, wps, target;
      fill_batch(order, start, count, &masks, &wps, &target);
      model->zero_grad();
      const nn::Tensor pred = model->forward(masks, wps);
      auto loss = nn::bce_loss(pred, target, cfg.pos_weight);
      model->backward(loss.grad);
      opt.step(model_params);
      loss_acc += loss.loss;
      ++batches;
    }
    report.epoch_losses.push_back(static_cast<float>(loss_acc / std::max(1, batches)));
    report.epochs_run = epoch + 1;
    report.val_iou = val_iou();
    if (on_epoch) on_epoch(epoch, report.epoch_losses.back(), report.val_iou);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (cfg.target_iou > 0.0 && report.val_iou >= cfg.target_iou && epoch >= 1) break;
    if (elapsed > cfg.max_seconds) break;
  }
  return report;
}

double evaluate_route_predictor(const RoutePredictor& model, const RouteDataset& dataset,
                                size_t begin, size_t end, double threshold) {
  auto* self = const_cast<RoutePredictor*>(&model);
  std::vector<world::TownMap> towns;
  std::vector<world::LaneIndex> indexes;
  for (const auto& key : dataset.towns) {
    towns.push_back(world::generate_town(key.seed, key.spec));
    indexes.emplace_back(towns.back());
  }
  const size_t plane = 2 * 48 * 48;
  double acc = 0.0;
  int count = 0;
  const size_t kChunk = 64;
  std::vector<float> scratch(plane);
  for (size_t start = begin; start < end; start += kChunk) {
    const size_t n = std::min(kChunk, end - start);
    nn::Tensor masks({static_cast<int>(n), 2, 48, 48});
    nn::Tensor wps({static_cast<int>(n), 5, 2});
    for (size_t s = 0; s < n; ++s) {
      const auto& rec = dataset.records[start + s];
      dataset_inputs(towns[static_cast<size_t>(rec.town_index)],
                     indexes[static_cast<size_t>(rec.town_index)], rec, scratch.data());
      std::memcpy(masks.ptr() + s * plane, scratch.data(), plane * sizeof(float));
      for (int w = 0; w < 5; ++w) {
        wps.data[(s * 5 + static_cast<size_t>(w)) * 2] =
            static_cast<float>(rec.waypoints_local[static_cast<size_t>(w)].x);
        wps.data[(s * 5 + static_cast<size_t>(w)) * 2 + 1] =
            static_cast<float>(rec.waypoints_local[static_cast<size_t>(w)].y);
      }
    }
    const nn::Tensor pred = self->forward(masks, wps);
    for (size_t s = 0; s < n; ++s) {
      std::array<uint8_t, 48 * 48> bin;
      for (size_t j = 0; j < bin.size(); ++j) {
        bin[j] = pred.data[s * bin.size() + j] >= threshold ? 1 : 0;
      }
      acc += percep::iou(bin.data(), dataset.records[start + s].oracle_mask.data(), bin.size());
      ++count;
    }
  }
  return count > 0 ? acc / count : 0.0;
}

}  // namespace bevdrive::route
