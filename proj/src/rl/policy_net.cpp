#include "bevdrive/rl/policy_net.hpp"

#include <cstring>

namespace bevdrive::rl {

PolicyValueNet::PolicyValueNet(const PolicyNetConfig& cfg, uint64_t seed) : cfg_(cfg) {
  Rng rng(seed);
  int ch = cfg.bev_channels;
  int side = cfg.grid_side;
  for (int oc : cfg.conv_channels) {
    convs_.emplace_back(ch, oc, 3, 2, 1);
    ch = oc;
    side = (side + 2 - 3) / 2 + 1;
  }
  conv_acts_.resize(convs_.size());
  bev_feat_dim_ = ch * side * side;
  fc_bev_ = std::make_unique<nn::Dense<float>>(bev_feat_dim_, cfg.trunk_width);
  fc_meas_ = std::make_unique<nn::Dense<float>>(cfg.meas_dim, cfg.meas_embed);
  fc_joint_ = std::make_unique<nn::Dense<float>>(cfg.trunk_width + cfg.meas_embed, cfg.trunk_width);
  head_mu_ = std::make_unique<nn::Dense<float>>(cfg.trunk_width, kActionDim);
  head_value_ = std::make_unique<nn::Dense<float>>(cfg.trunk_width, 1);

  for (auto& c : convs_) c.init(rng);
  fc_bev_->init(rng);
  fc_meas_->init(rng);
  fc_joint_->init(rng);
  head_mu_->init(rng);
  head_value_->init(rng);
  // Small action head keeps initial behavior near zero steer; a positive
  // accel bias gets the car rolling so the progress signal shows up early.
  for (auto& w : head_mu_->weight.data) w *= 0.01f;
  head_mu_->bias.data[1] = 0.3f;
  for (auto& w : head_value_->weight.data) w *= 0.1f;

  log_std_ = nn::Tensor({kActionDim});
  log_std_.fill(cfg.init_log_std);
  grad_log_std_ = nn::Tensor({kActionDim});
}

PolicyValueNet::Output PolicyValueNet::forward(const nn::Tensor& bev, const nn::Tensor& meas) {
  const int b = bev.dim(0);
  cached_batch_ = b;
  nn::Tensor x = bev;
  for (size_t i = 0; i < convs_.size(); ++i) {
    x = conv_acts_[i].forward(convs_[i].forward(x));
  }
  x = act_bev_.forward(fc_bev_->forward(flatten_.forward(x)));
  nn::Tensor m = act_meas_.forward(fc_meas_->forward(meas));

  nn::Tensor joint({b, cfg_.trunk_width + cfg_.meas_embed});
  for (int s = 0; s < b; ++s) {
    std::memcpy(joint.ptr() + static_cast<size_t>(s) * joint.dim(1),
                x.ptr() + static_cast<size_t>(s) * cfg_.trunk_width,
                sizeof(float) * cfg_.trunk_width);
    std::memcpy(joint.ptr() + static_cast<size_t>(s) * joint.dim(1) + cfg_.trunk_width,
                m.ptr() + static_cast<size_t>(s) * cfg_.meas_embed,
                sizeof(float) * cfg_.meas_embed);
  }
  nn::Tensor h = act_joint_.forward(fc_joint_->forward(joint));
  Output out;
  out.mu = head_mu_->forward(h);
  out.value = head_value_->forward(h);
  return out;
}

void PolicyValueNet::backward(const nn::Tensor& dmu, const nn::Tensor& dvalue) {
  const int b = cached_batch_;
  nn::Tensor dh = head_mu_->backward(dmu);
  const nn::Tensor dh_v = head_value_->backward(dvalue);
  for (size_t i = 0; i < dh.size(); ++i) dh.data[i] += dh_v.data[i];
  const nn::Tensor djoint = fc_joint_->backward(act_joint_.backward(dh));

  nn::Tensor dx({b, cfg_.trunk_width});
  nn::Tensor dm({b, cfg_.meas_embed});
  for (int s = 0; s < b; ++s) {
    std::memcpy(dx.ptr() + static_cast<size_t>(s) * cfg_.trunk_width,
                djoint.ptr() + static_cast<size_t>(s) * djoint.dim(1),
                sizeof(float) * cfg_.trunk_width);
    std::memcpy(dm.ptr() + static_cast<size_t>(s) * cfg_.meas_embed,
                djoint.ptr() + static_cast<size_t>(s) * djoint.dim(1) + cfg_.trunk_width,
                sizeof(float) * cfg_.meas_embed);
  }
  fc_meas_->backward(act_meas_.backward(dm));
  nn::Tensor dconv = flatten_.backward(fc_bev_->backward(act_bev_.backward(dx)));
  for (size_t i = convs_.size(); i-- > 0;) {
    dconv = convs_[i].backward(conv_acts_[i].backward(dconv));
  }
}

std::vector<nn::ParamRef<float>> PolicyValueNet::params() {
  std::vector<nn::ParamRef<float>> out;
  for (size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect_params("conv" + std::to_string(i), &out);
  }
  fc_bev_->collect_params("fc_bev", &out);
  fc_meas_->collect_params("fc_meas", &out);
  fc_joint_->collect_params("fc_joint", &out);
  head_mu_->collect_params("head_mu", &out);
  head_value_->collect_params("head_value", &out);
  out.push_back({"log_std", &log_std_, &grad_log_std_});
  return out;
}

void PolicyValueNet::zero_grad() {
  for (auto& p : params()) p.grad->fill(0.0f);
}

std::vector<nn::LayerSpec> PolicyValueNet::specs() const {
  std::vector<nn::LayerSpec> out;
  for (const auto& c : convs_) out.push_back(c.spec());
  out.push_back(fc_bev_->spec());
  out.push_back(fc_meas_->spec());
  out.push_back(fc_joint_->spec());
  out.push_back(head_mu_->spec());
  out.push_back(head_value_->spec());
  return out;
}

std::vector<std::vector<float>> PolicyValueNet::snapshot_params() {
  std::vector<std::vector<float>> snap;
  for (auto& p : params()) snap.push_back(p.value->data);
  return snap;
}

void PolicyValueNet::restore_params(const std::vector<std::vector<float>>& snap) {
  auto ps = params();
  for (size_t i = 0; i < ps.size(); ++i) ps[i].value->data = snap[i];
}

}  // namespace bevdrive::rl
