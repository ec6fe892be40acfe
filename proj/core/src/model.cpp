// SPDX-License-Identifier: Apache-2.0
#include "cldistill/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "cldistill/hash.h"
#include "cldistill/ops.h"

namespace cldistill {
namespace {

Tensor gaussian(std::mt19937_64& rng, Shape shape, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from_values(std::move(shape), std::move(v), /*requires_grad=*/true);
}

}  // namespace

ToyVQLAModel::ToyVQLAModel(ModelConfig config, std::vector<int> class_ids,
                           std::uint64_t seed)
    : config_(config), class_ids_(std::move(class_ids)), seed_(seed), rng_(seed) {
  if (config_.d_img == 0 || config_.d_h == 0 || config_.vocab == 0)
    throw std::invalid_argument("model dimensions must be positive");
  if (class_ids_.empty())
    throw std::invalid_argument("model needs at least one class");
  std::vector<int> sorted = class_ids_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("duplicate class id in model");
  init_parameters();
}

void ToyVQLAModel::init_parameters() {
  const auto d_img = config_.d_img, d_h = config_.d_h, vocab = config_.vocab;
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(d_img));
  const double hidden_std = 1.0 / std::sqrt(static_cast<double>(d_h));
  img_proj_w_ = gaussian(rng_, {d_h, d_img}, proj_std);
  img_proj_b_ = Tensor::zeros({d_h}, true);
  txt_embed_ = gaussian(rng_, {vocab, d_h}, 0.5);
  backbone1_w_ = gaussian(rng_, {d_h, d_h}, hidden_std);
  backbone1_b_ = Tensor::zeros({d_h}, true);
  backbone2_w_ = gaussian(rng_, {d_h, d_h}, hidden_std);
  backbone2_b_ = Tensor::zeros({d_h}, true);
  classifier_ = gaussian(rng_, {class_ids_.size(), d_h}, 0.01);
  det1_w_ = gaussian(rng_, {d_h, d_h}, hidden_std);
  det1_b_ = Tensor::zeros({d_h}, true);
  det2_w_ = gaussian(rng_, {d_h, d_h}, hidden_std);
  det2_b_ = Tensor::zeros({d_h}, true);
  det3_w_ = gaussian(rng_, {4, d_h}, hidden_std);
  det3_b_ = Tensor::zeros({4}, true);
}

int ToyVQLAModel::row_of(int class_id) const {
  auto it = std::find(class_ids_.begin(), class_ids_.end(), class_id);
  if (it == class_ids_.end()) return -1;
  return static_cast<int>(it - class_ids_.begin());
}

Tensor ToyVQLAModel::features(Tape& tape, const Tensor& image_feat,
                              std::span<const int> question) const {
  if (image_feat.size() != config_.d_img)
    throw std::invalid_argument("forward: image feature dimension mismatch");
  Tensor img_slot = linear(tape, img_proj_w_, image_feat, img_proj_b_);
  std::vector<Tensor> slots{img_slot};
  if (!question.empty())
    slots.push_back(embedding_rows(tape, txt_embed_, question));
  Tensor fused = concat_rows(tape, slots);
  Tensor hidden = tanh_t(tape, rows_linear(tape, backbone1_w_, fused, backbone1_b_));
  return tanh_t(tape, rows_linear(tape, backbone2_w_, hidden, backbone2_b_));
}

HeadsOutput ToyVQLAModel::heads(Tape& tape, const Tensor& feature_map) const {
  if (!classifier_.defined())
    throw std::logic_error("heads: model has no classes yet");
  Tensor pooled = mean_rows(tape, feature_map);
  Tensor logits = matvec(tape, classifier_, pooled);
  Tensor h1 = tanh_t(tape, linear(tape, det1_w_, pooled, det1_b_));
  Tensor h2 = tanh_t(tape, linear(tape, det2_w_, h1, det2_b_));
  Tensor box = sigmoid_t(tape, linear(tape, det3_w_, h2, det3_b_));
  return {logits, box};
}

ForwardOutput ToyVQLAModel::forward(Tape& tape, const Tensor& image_feat,
                                    std::span<const int> question) const {
  Tensor f = features(tape, image_feat, question);
  HeadsOutput out = heads(tape, f);
  return {out.logits, out.box_cxcywh, f};
}

void ToyVQLAModel::expand_classifier(std::span<const int> new_class_ids) {
  if (new_class_ids.empty()) return;
  for (int id : new_class_ids)
    if (row_of(id) >= 0)
      throw std::invalid_argument("expand_classifier: class already present");
  std::vector<int> fresh(new_class_ids.begin(), new_class_ids.end());
  std::sort(fresh.begin(), fresh.end());
  if (std::adjacent_find(fresh.begin(), fresh.end()) != fresh.end())
    throw std::invalid_argument("expand_classifier: duplicate new class id");

  const std::size_t d_h = config_.d_h;
  const std::size_t old_n = class_ids_.size();
  const std::size_t new_n = old_n + new_class_ids.size();
  std::vector<double> values(new_n * d_h);
  if (classifier_.defined())
    std::copy_n(classifier_.data().begin(), old_n * d_h, values.begin());
  std::normal_distribution<double> dist(0.0, 0.01);
  for (std::size_t i = old_n * d_h; i < values.size(); ++i) values[i] = dist(rng_);
  classifier_ = Tensor::from_values({new_n, d_h}, std::move(values), true);
  class_ids_.insert(class_ids_.end(), new_class_ids.begin(), new_class_ids.end());
}

ToyVQLAModel ToyVQLAModel::freeze_snapshot() const {
  ToyVQLAModel snap;
  snap.config_ = config_;
  snap.class_ids_ = class_ids_;
  snap.seed_ = seed_;
  snap.rng_ = rng_;
  snap.period = period;
  snap.scenario_hash = scenario_hash;
  auto mine = parameters();
  std::vector<Tensor*> slots = {
      &snap.img_proj_w_, &snap.img_proj_b_, &snap.txt_embed_,
      &snap.backbone1_w_, &snap.backbone1_b_, &snap.backbone2_w_,
      &snap.backbone2_b_, &snap.classifier_,  &snap.det1_w_,
      &snap.det1_b_,      &snap.det2_w_,      &snap.det2_b_,
      &snap.det3_w_,      &snap.det3_b_};
  for (std::size_t i = 0; i < mine.size(); ++i)
    *slots[i] = mine[i].second.clone(/*requires_grad=*/false);
  return snap;
}

std::vector<std::pair<std::string, Tensor>> ToyVQLAModel::parameters() {
  return std::as_const(*this).parameters();
}

std::vector<std::pair<std::string, Tensor>> ToyVQLAModel::parameters() const {
  return {
      {"img_proj.w", img_proj_w_}, {"img_proj.b", img_proj_b_},
      {"txt_embed", txt_embed_},   {"backbone1.w", backbone1_w_},
      {"backbone1.b", backbone1_b_}, {"backbone2.w", backbone2_w_},
      {"backbone2.b", backbone2_b_}, {"classifier", classifier_},
      {"det1.w", det1_w_},         {"det1.b", det1_b_},
      {"det2.w", det2_w_},         {"det2.b", det2_b_},
      {"det3.w", det3_w_},         {"det3.b", det3_b_},
  };
}

void ToyVQLAModel::zero_grads() {
  for (auto& [name, t] : parameters()) t.zero_grad();
}

std::uint64_t ToyVQLAModel::parameter_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [name, t] : parameters()) {
    h ^= fnv1a64(name);
    h *= 1099511628211ull;
    auto bytes = std::as_bytes(t.data());
    h ^= fnv1a64({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()});
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace cldistill
