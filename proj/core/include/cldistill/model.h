// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cldistill/tensor.h"

namespace cldistill {

struct ModelConfig {
  std::size_t d_img = 16;
  std::size_t d_h = 32;
  std::size_t vocab = 64;
  std::size_t l_q = 8;

  bool operator==(const ModelConfig&) const = default;
};

struct HeadsOutput {
  Tensor logits;      // [n_classes]
  Tensor box_cxcywh;  // [4], each coordinate in (0,1)
};

struct ForwardOutput {
  Tensor logits;
  Tensor box_cxcywh;
  Tensor features;  // [1 + question length, d_h]
};

/// Two-branch toy network: image projection + token embeddings fused by a
/// position-wise two-layer tanh backbone into a feature map F, with a
/// bias-free expandable classifier and a 3-layer sigmoid-capped box head on
/// the mean-pooled feature.
class ToyVQLAModel {
public:
  ToyVQLAModel(ModelConfig config, std::vector<int> class_ids, std::uint64_t seed);

  ToyVQLAModel(const ToyVQLAModel&) = delete;
  ToyVQLAModel& operator=(const ToyVQLAModel&) = delete;
  ToyVQLAModel(ToyVQLAModel&&) = default;
  ToyVQLAModel& operator=(ToyVQLAModel&&) = default;

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  /// Classifier row order; row i scores class class_ids()[i].
  const std::vector<int>& class_ids() const { return class_ids_; }
  std::size_t n_classes() const { return class_ids_.size(); }
  /// Classifier row of a class id, or -1 if the class is unknown.
  int row_of(int class_id) const;

  /// Backbone only: fused feature map F.
  Tensor features(Tape& tape, const Tensor& image_feat,
                  std::span<const int> question) const;
  /// Classifier + detector on a (possibly calibrated) feature map.
  HeadsOutput heads(Tape& tape, const Tensor& feature_map) const;
  /// features + heads on the raw feature map.
  ForwardOutput forward(Tape& tape, const Tensor& image_feat,
                        std::span<const int> question) const;

  /// Appends classifier rows for new classes, preserving existing rows
  /// bit-exactly. New rows draw from the model's seeded stream with std 0.01.
  void expand_classifier(std::span<const int> new_class_ids);

  /// Deep copy with gradients disabled everywhere; training the live model
  /// never touches the snapshot.
  ToyVQLAModel freeze_snapshot() const;

  /// Parameter handles in a stable order (shared storage with the model).
  std::vector<std::pair<std::string, Tensor>> parameters();
  std::vector<std::pair<std::string, Tensor>> parameters() const;

  void zero_grads();

  /// FNV hash over the raw bytes of every parameter, in order.
  std::uint64_t parameter_hash() const;

  // Checkpoint metadata carried alongside the weights.
  int period = 0;
  std::string scenario_hash;

private:
  ToyVQLAModel() = default;
  friend ToyVQLAModel load_checkpoint(const std::filesystem::path&);

  void init_parameters();

  ModelConfig config_;
  std::vector<int> class_ids_;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;

  Tensor img_proj_w_, img_proj_b_;
  Tensor txt_embed_;
  Tensor backbone1_w_, backbone1_b_;
  Tensor backbone2_w_, backbone2_b_;
  Tensor classifier_;  // [n_classes, d_h], bias-free
  Tensor det1_w_, det1_b_;
  Tensor det2_w_, det2_b_;
  Tensor det3_w_, det3_b_;
};

/// Checkpoint layout: one UTF-8 JSON manifest line, a newline, then the raw
/// little-endian IEEE-754 doubles of every parameter in manifest order.
void save_checkpoint(const ToyVQLAModel& model, const std::filesystem::path& path);
ToyVQLAModel load_checkpoint(const std::filesystem::path& path);

}  // namespace cldistill
