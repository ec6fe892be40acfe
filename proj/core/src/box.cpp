// SPDX-License-Identifier: Apache-2.0
#include "cldistill/box.h"

#include <algorithm>
#include <stdexcept>

namespace cldistill {

double intersection_area(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  return iw * ih;
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return inter / uni;
}

double giou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double cw = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double ch = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double enclosure = cw * ch;
  if (enclosure <= 0.0) return 1.0;  // both boxes collapse to the same point
  const double iou_term = uni > 0.0 ? inter / uni : 0.0;
  return iou_term - (enclosure - uni) / enclosure;
}

double mean_iou(std::span<const Box> pred, std::span<const Box> gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("mean_iou: length mismatch");
  if (pred.empty()) throw std::invalid_argument("mean_iou: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += iou(pred[i], gt[i]);
  return s / static_cast<double>(pred.size());
}

}  // namespace cldistill
