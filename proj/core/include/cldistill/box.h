// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

namespace cldistill {

/// Axis-aligned box in normalized corner form. Zero-area boxes are allowed.
struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  bool valid() const { return x1 <= x2 && y1 <= y2; }
  double area() const { return (x2 - x1) * (y2 - y1); }
  bool operator==(const Box&) const = default;
};

double intersection_area(const Box& a, const Box& b);

/// Plain IoU. If both boxes are degenerate (union area zero) this is 1 for
/// identical points and 0 otherwise.
double iou(const Box& a, const Box& b);

/// Generalized IoU: IoU minus the empty fraction of the smallest enclosing
/// box. Degenerate pairs follow the same convention as the differentiable
/// version: identical points give 1, otherwise only the enclosure term
/// remains.
double giou(const Box& a, const Box& b);

double mean_iou(std::span<const Box> pred, std::span<const Box> gt);

}  // namespace cldistill
