// SPDX-License-Identifier: Apache-2.0
#include "cldistill/continual.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cldistill {

ClassRegistry::ClassRegistry(std::vector<ClassInfo> classes,
                             std::vector<std::vector<int>> period_membership)
    : classes_(std::move(classes)), membership_(std::move(period_membership)) {
  std::set<int> ids;
  for (const ClassInfo& c : classes_)
    if (!ids.insert(c.id).second)
      throw std::invalid_argument("registry: duplicate class id");
  if (membership_.empty())
    throw std::invalid_argument("registry: needs at least one period");
  for (auto& period : membership_) {
    std::sort(period.begin(), period.end());
    period.erase(std::unique(period.begin(), period.end()), period.end());
    for (int id : period)
      if (!ids.count(id))
        throw std::invalid_argument("registry: period references unknown class");
  }
  if (membership_[0].empty())
    throw std::invalid_argument("registry: period 0 must be nonempty");
}

void ClassRegistry::check_period(int t) const {
  if (t < 0 || t >= total_periods())
    throw std::out_of_range("registry: period index out of range");
}

const std::string& ClassRegistry::name_of(int class_id) const {
  for (const ClassInfo& c : classes_)
    if (c.id == class_id) return c.name;
  throw std::out_of_range("registry: unknown class id");
}

bool ClassRegistry::has_class(int class_id) const {
  for (const ClassInfo& c : classes_)
    if (c.id == class_id) return true;
  return false;
}

std::vector<int> ClassRegistry::classes_at(int t) const {
  check_period(t);
  return membership_[static_cast<std::size_t>(t)];
}

std::vector<int> ClassRegistry::old_classes(int t) const {
  check_period(t);
  std::set<int> acc;
  for (int p = 0; p < t; ++p)
    acc.insert(membership_[static_cast<std::size_t>(p)].begin(),
               membership_[static_cast<std::size_t>(p)].end());
  return {acc.begin(), acc.end()};
}

std::vector<int> ClassRegistry::seen_through(int t) const {
  check_period(t);
  std::set<int> acc;
  for (int p = 0; p <= t; ++p)
    acc.insert(membership_[static_cast<std::size_t>(p)].begin(),
               membership_[static_cast<std::size_t>(p)].end());
  return {acc.begin(), acc.end()};
}

std::vector<int> ClassRegistry::first_seen_at(int t) const {
  std::vector<int> current = classes_at(t);
  std::vector<int> old = old_classes(t);
  std::vector<int> out;
  std::set_difference(current.begin(), current.end(), old.begin(), old.end(),
                      std::back_inserter(out));
  return out;
}

ClassPartition partition_classes(const ClassRegistry& registry, int t) {
  if (t < 1 || t >= registry.total_periods())
    throw std::out_of_range("partition_classes: need 1 <= t < total periods");
  std::vector<int> old = registry.old_classes(t);
  std::vector<int> current = registry.classes_at(t);
  ClassPartition part;
  std::set_intersection(old.begin(), old.end(), current.begin(), current.end(),
                        std::back_inserter(part.overlapping));
  std::set_difference(old.begin(), old.end(), current.begin(), current.end(),
                      std::back_inserter(part.old_nonoverlapping));
  std::set_difference(current.begin(), current.end(), old.begin(), old.end(),
                      std::back_inserter(part.new_nonoverlapping));
  return part;
}

double weight_align(Tensor& classifier, std::span<const std::size_t> old_rows,
                    std::span<const std::size_t> new_rows) {
  if (classifier.shape().size() != 2)
    throw std::invalid_argument("weight_align: classifier must be 2-D");
  if (old_rows.empty() || new_rows.empty())
    throw std::invalid_argument("weight_align: both row groups must be nonempty");
  const std::size_t n = classifier.rows(), d = classifier.cols();
  std::vector<char> seen(n, 0);
  auto mark = [&](std::span<const std::size_t> rows) {
    for (std::size_t r : rows) {
      if (r >= n) throw std::out_of_range("weight_align: row index out of range");
      if (seen[r]++) throw std::invalid_argument("weight_align: row groups overlap");
    }
  };
  mark(old_rows);
  mark(new_rows);

  auto values = classifier.data();
  auto mean_norm = [&](std::span<const std::size_t> rows) {
    double s = 0.0;
    for (std::size_t r : rows) {
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double v = values[r * d + j];
        sq += v * v;
      }
      s += std::sqrt(sq);
    }
    return s / static_cast<double>(rows.size());
  };

  const double new_mean = mean_norm(new_rows);
  if (new_mean == 0.0)
    throw std::invalid_argument("weight_align: new rows are all zero, scale undefined");
  const double scale = mean_norm(old_rows) / new_mean;
  for (std::size_t r : new_rows)
    for (std::size_t j = 0; j < d; ++j) values[r * d + j] *= scale;
  return scale;
}

}  // namespace cldistill
