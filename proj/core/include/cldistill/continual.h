// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "cldistill/tensor.h"

namespace cldistill {

struct ClassInfo {
  int id = 0;
  std::string name;
};

/// Class-id table with per-period membership. Period t's "old" classes are
/// everything seen in periods 0..t-1.
class ClassRegistry {
public:
  ClassRegistry(std::vector<ClassInfo> classes,
                std::vector<std::vector<int>> period_membership);

  int total_periods() const { return static_cast<int>(membership_.size()); }
  const std::vector<ClassInfo>& classes() const { return classes_; }
  const std::string& name_of(int class_id) const;
  bool has_class(int class_id) const;

  std::vector<int> classes_at(int t) const;     // sorted
  std::vector<int> old_classes(int t) const;    // union over 0..t-1, sorted
  std::vector<int> seen_through(int t) const;   // union over 0..t, sorted
  std::vector<int> first_seen_at(int t) const;  // classes_at(t) minus old_classes(t)

private:
  void check_period(int t) const;
  std::vector<ClassInfo> classes_;
  std::vector<std::vector<int>> membership_;  // sorted unique ids per period
};

/// Ground-truth groups used by the evaluation tables: classes in both old and
/// new sets, classes seen before but absent now, and classes new this period.
struct ClassPartition {
  std::vector<int> overlapping;         // C_old intersect C_new
  std::vector<int> old_nonoverlapping;  // C_old minus C_new
  std::vector<int> new_nonoverlapping;  // C_new minus C_old
};

/// Requires 1 <= t < total_periods. All three sets come out sorted.
ClassPartition partition_classes(const ClassRegistry& registry, int t);

/// Rescales the given new rows of a classifier so their mean L2 norm matches
/// the mean over the old rows, leaving directions intact. Returns the scale.
/// Throws if the new rows have zero mean norm.
double weight_align(Tensor& classifier, std::span<const std::size_t> old_rows,
                    std::span<const std::size_t> new_rows);

}  // namespace cldistill
