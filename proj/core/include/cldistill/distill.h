// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cldistill/tensor.h"

namespace cldistill {

/// Distillation temperatures for the two old-class groups. The intended
/// regime is t_op > t_on (softer on overlapping classes); other settings are
/// legal for ablation grids and only produce a warning.
struct TemperaturePair {
  double t_op = 25.0;
  double t_on = 20.0;

  /// Returns a human-readable warning when the pair leaves the intended
  /// t_op > t_on > 0 regime, or rejects non-positive temperatures.
  std::optional<std::string> check() const;
};

/// Index sets into the old-class logit vector (teacher row order). Together
/// they must cover every old class exactly once.
struct OldClassSplit {
  std::vector<int> overlapping;
  std::vector<int> old_nonoverlapping;
};

/// Label-smoothed stand-in for the old model: probability lambda at the old
/// model's argmax class, (1-lambda)/(n-1) everywhere else. Ties resolve to
/// the lowest index. Requires n >= 2 and 0 < lambda < 1.
std::vector<double> build_pseudo_teacher(std::span<const double> old_logits,
                                         double lambda);

/// Temperature-softens a probability vector: normalized p^(1/T). T == 1
/// returns the input unchanged; zero entries are floored at 1e-12 before
/// exponentiation.
std::vector<double> soften_distribution(std::span<const double> p, double temperature);

/// Rigidity-plasticity-aware logits distillation for one sample: partial KL
/// between the softened pseudo-teacher and the student's softened old-class
/// probabilities, evaluated at t_op over overlapping classes and t_on over
/// old non-overlapping classes, then summed. The caller averages over the
/// batch.
Tensor rkd_loss(Tape& tape, std::span<const double> pseudo_teacher,
                const Tensor& cl_logits_old, const OldClassSplit& split,
                const TemperaturePair& temps);

/// Parameter-free feature self-calibration: each entry is gated by the
/// sigmoid of itself plus its column's positional mean, F' = F * sigmoid(F + g).
Tensor self_calibrate(Tape& tape, const Tensor& feature_map);

/// Squared L2 distance between the frozen old feature map and the calibrated
/// current one, summed over all entries. The caller averages over the batch.
Tensor fkd_loss(Tape& tape, const Tensor& old_features, const Tensor& calibrated);

/// Single-temperature logits distillation baseline: soft cross-entropy
/// -sum p_T(old) * log p_T(student). The caller averages over the batch.
Tensor lkd_loss(Tape& tape, std::span<const double> old_logits,
                const Tensor& cl_logits_old, double temperature = 2.0);

}  // namespace cldistill
