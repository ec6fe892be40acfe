// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "cldistill/ops.h"
#include "cldistill/tensor.h"

namespace cldistill {

/// Loss balance factors. mu trades classification against localization inside
/// the task loss; alpha/beta/gamma combine task and distillation losses.
struct LossWeights {
  double mu = 100.0;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 5.0;

  void validate() const;  // all factors must be >= 0
};

/// -log softmax(logits)[label] via log-sum-exp.
Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label);

/// Sum of absolute corner differences between two [x1,y1,x2,y2] tensors.
Tensor l1_box(Tape& tape, const Tensor& pred_corners, const Tensor& gt_corners);

/// Differentiable GIoU of two corner tensors. Matches the plain giou() on
/// values; gradients use the a.e. subderivative through min/max.
Tensor giou_t(Tape& tape, const Tensor& a_corners, const Tensor& b_corners);

/// Maps a (cx,cy,w,h) box tensor to corner form (x1,y1,x2,y2).
Tensor cxcywh_to_corners(Tape& tape, const Tensor& box_cxcywh);

/// mu * CE + L1 + (1 - GIoU) for one sample.
Tensor vqla_loss(Tape& tape, const Tensor& logits, std::size_t label,
                 const Tensor& pred_corners, const Tensor& gt_corners,
                 const LossWeights& w);

/// Period-dependent objective: the task loss alone in the first period,
/// alpha*vqla + beta*rkd + gamma*fkd afterwards. Distillation terms must be
/// present exactly when period > 0.
Tensor total_loss(Tape& tape, const Tensor& vqla, const std::optional<Tensor>& rkd,
                  const std::optional<Tensor>& fkd, int period, const LossWeights& w);

}  // namespace cldistill
