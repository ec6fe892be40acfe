// SPDX-License-Identifier: Apache-2.0
#include "cldistill/losses.h"

#include <stdexcept>

namespace cldistill {

void LossWeights::validate() const {
  if (mu < 0.0 || alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw std::invalid_argument("loss weights must be non-negative");
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label) {
  if (label >= logits.size())
    throw std::out_of_range("cross_entropy: label out of range");
  return sub(tape, log_sum_exp(tape, logits), index_t(tape, logits, label));
}

Tensor l1_box(Tape& tape, const Tensor& pred_corners, const Tensor& gt_corners) {
  if (pred_corners.size() != 4 || gt_corners.size() != 4)
    throw std::invalid_argument("l1_box: corner tensors must have 4 entries");
  return sum_t(tape, abs_t(tape, sub(tape, pred_corners, gt_corners)));
}

namespace {

struct CornerScalars {
  Tensor x1, y1, x2, y2;
};

CornerScalars split_corners(Tape& tape, const Tensor& corners, const char* name) {
  if (corners.size() != 4)
    throw std::invalid_argument(std::string(name) + ": corner tensor must have 4 entries");
  if (corners.at(0) > corners.at(2) || corners.at(1) > corners.at(3))
    throw std::invalid_argument(std::string(name) + ": invalid box (x1>x2 or y1>y2)");
  return {index_t(tape, corners, 0), index_t(tape, corners, 1),
          index_t(tape, corners, 2), index_t(tape, corners, 3)};
}

}  // namespace

Tensor giou_t(Tape& tape, const Tensor& a_corners, const Tensor& b_corners) {
  CornerScalars a = split_corners(tape, a_corners, "giou");
  CornerScalars b = split_corners(tape, b_corners, "giou");

  Tensor zero = Tensor::scalar(0.0);
  Tensor iw = smax(tape, sub(tape, smin(tape, a.x2, b.x2), smax(tape, a.x1, b.x1)), zero);
  Tensor ih = smax(tape, sub(tape, smin(tape, a.y2, b.y2), smax(tape, a.y1, b.y1)), zero);
  Tensor inter = mul(tape, iw, ih);

  Tensor area_a = mul(tape, sub(tape, a.x2, a.x1), sub(tape, a.y2, a.y1));
  Tensor area_b = mul(tape, sub(tape, b.x2, b.x1), sub(tape, b.y2, b.y1));
  Tensor uni = sub(tape, add(tape, area_a, area_b), inter);

  Tensor cw = sub(tape, smax(tape, a.x2, b.x2), smin(tape, a.x1, b.x1));
  Tensor ch = sub(tape, smax(tape, a.y2, b.y2), smin(tape, a.y1, b.y1));
  Tensor enclosure = mul(tape, cw, ch);

  if (enclosure.value() <= 0.0) return Tensor::scalar(1.0);  // identical points
  Tensor penalty = div_s(tape, sub(tape, enclosure, uni), enclosure);
  if (uni.value() <= 0.0) return scale(tape, penalty, -1.0);
  return sub(tape, div_s(tape, inter, uni), penalty);
}

Tensor cxcywh_to_corners(Tape& tape, const Tensor& box_cxcywh) {
  if (box_cxcywh.size() != 4)
    throw std::invalid_argument("cxcywh_to_corners: box tensor must have 4 entries");
  // corners = A * (cx, cy, w, h)
  static const std::vector<double> kToCorners = {
      1.0, 0.0, -0.5, 0.0,  //
      0.0, 1.0, 0.0,  -0.5,  //
      1.0, 0.0, 0.5,  0.0,  //
      0.0, 1.0, 0.0,  0.5,
  };
  Tensor a = Tensor::from_values({4, 4}, kToCorners);
  return matvec(tape, a, box_cxcywh);
}

Tensor vqla_loss(Tape& tape, const Tensor& logits, std::size_t label,
                 const Tensor& pred_corners, const Tensor& gt_corners,
                 const LossWeights& w) {
  w.validate();
  Tensor ce = cross_entropy(tape, logits, label);
  Tensor l1 = l1_box(tape, pred_corners, gt_corners);
  Tensor giou_loss = sub(tape, Tensor::scalar(1.0), giou_t(tape, pred_corners, gt_corners));
  return add(tape, scale(tape, ce, w.mu), add(tape, l1, giou_loss));
}

Tensor total_loss(Tape& tape, const Tensor& vqla, const std::optional<Tensor>& rkd,
                  const std::optional<Tensor>& fkd, int period, const LossWeights& w) {
  w.validate();
  if (period < 0) throw std::invalid_argument("total_loss: negative period");
  if (period == 0) {
    if (rkd || fkd)
      throw std::invalid_argument("total_loss: distillation terms given at period 0");
    return vqla;
  }
  if (!rkd || !fkd)
    throw std::invalid_argument("total_loss: distillation terms required for period > 0");
  Tensor out = scale(tape, vqla, w.alpha);
  out = add(tape, out, scale(tape, *rkd, w.beta));
  out = add(tape, out, scale(tape, *fkd, w.gamma));
  return out;
}

}  // namespace cldistill
