// SPDX-License-Identifier: Apache-2.0
#include "cldistill/distill.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cldistill/ops.h"

namespace cldistill {

std::optional<std::string> TemperaturePair::check() const {
  if (!(t_op > 0.0) || !(t_on > 0.0))
    throw std::invalid_argument("temperatures must be positive");
  if (t_op <= t_on)
    return "temperature pair leaves the intended regime (expected t_op > t_on, got t_op=" +
           std::to_string(t_op) + ", t_on=" + std::to_string(t_on) + ")";
  return std::nullopt;
}

std::vector<double> build_pseudo_teacher(std::span<const double> old_logits,
                                         double lambda) {
  const std::size_t n = old_logits.size();
  if (n < 2)
    throw std::invalid_argument(
        "build_pseudo_teacher: needs at least two old classes");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("build_pseudo_teacher: lambda must be in (0,1)");
  // argmax of softmax(old_logits) == argmax of the logits; ties -> lowest idx
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (old_logits[i] > old_logits[best]) best = i;
  std::vector<double> p(n, (1.0 - lambda) / static_cast<double>(n - 1));
  p[best] = lambda;
  return p;
}

std::vector<double> soften_distribution(std::span<const double> p, double temperature) {
  if (p.empty()) throw std::invalid_argument("soften_distribution: empty input");
  if (!(temperature > 0.0))
    throw std::invalid_argument("soften_distribution: temperature must be positive");
  double sum = 0.0;
  for (double x : p) {
    if (x < 0.0) throw std::invalid_argument("soften_distribution: negative entry");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("soften_distribution: input must sum to 1");
  std::vector<double> out(p.begin(), p.end());
  if (temperature == 1.0) return out;  // exact identity
  double z = 0.0;
  for (double& x : out) {
    x = std::exp(std::log(std::max(x, 1e-12)) / temperature);
    z += x;
  }
  for (double& x : out) x /= z;
  return out;
}

namespace {

void check_split(const OldClassSplit& split, std::size_t n) {
  std::vector<char> seen(n, 0);
  auto mark = [&](const std::vector<int>& group) {
    for (int i : group) {
      if (i < 0 || static_cast<std::size_t>(i) >= n)
        throw std::invalid_argument("rkd_loss: split index out of range");
      if (seen[static_cast<std::size_t>(i)]++)
        throw std::invalid_argument("rkd_loss: split groups overlap");
    }
  };
  mark(split.overlapping);
  mark(split.old_nonoverlapping);
  for (char c : seen)
    if (!c) throw std::invalid_argument("rkd_loss: split does not cover all old classes");
}

/// Partial KL over one group: sum_{c in group} p_c * (ln p_c - ln q_c), with
/// the teacher part folded into a constant and the student part recorded on
/// the tape.
Tensor partial_kl(Tape& tape, const std::vector<double>& teacher,
                  const Tensor& student_probs, const std::vector<int>& group) {
  double teacher_part = 0.0;
  std::vector<double> mask(teacher.size(), 0.0);
  for (int c : group) {
    const auto i = static_cast<std::size_t>(c);
    teacher_part += teacher[i] * std::log(teacher[i]);
    mask[i] = teacher[i];
  }
  Tensor student_part = weighted_sum(tape, log_t(tape, student_probs), mask);
  return sub(tape, Tensor::scalar(teacher_part), student_part);
}

}  // namespace

Tensor rkd_loss(Tape& tape, std::span<const double> pseudo_teacher,
                const Tensor& cl_logits_old, const OldClassSplit& split,
                const TemperaturePair& temps) {
  const std::size_t n = pseudo_teacher.size();
  if (n == 0) throw std::invalid_argument("rkd_loss: empty old-class set");
  if (cl_logits_old.size() != n)
    throw std::invalid_argument("rkd_loss: teacher/student length mismatch");
  temps.check();  // rejects non-positive temperatures
  check_split(split, n);

  Tensor loss = Tensor::scalar(0.0);
  struct Group {
    const std::vector<int>* indices;
    double temperature;
  };
  const Group groups[] = {{&split.overlapping, temps.t_op},
                          {&split.old_nonoverlapping, temps.t_on}};
  for (const Group& g : groups) {
    if (g.indices->empty()) continue;
    std::vector<double> teacher = soften_distribution(pseudo_teacher, g.temperature);
    Tensor student = softmax_temp(tape, cl_logits_old, g.temperature);
    loss = add(tape, loss, partial_kl(tape, teacher, student, *g.indices));
  }
  return loss;
}

Tensor self_calibrate(Tape& tape, const Tensor& feature_map) {
  if (feature_map.shape().size() != 2)
    throw std::invalid_argument("self_calibrate: feature map must be 2-D");
  Tensor global = mean_rows(tape, feature_map);
  Tensor context = broadcast_rows(tape, global, feature_map.rows());
  Tensor gate = sigmoid_t(tape, add(tape, feature_map, context));
  return mul(tape, feature_map, gate);
}

Tensor fkd_loss(Tape& tape, const Tensor& old_features, const Tensor& calibrated) {
  if (old_features.shape() != calibrated.shape())
    throw std::invalid_argument("fkd_loss: feature map shape mismatch");
  if (old_features.requires_grad())
    throw std::invalid_argument("fkd_loss: old features must come from a frozen model");
  Tensor diff = sub(tape, old_features, calibrated);
  return sum_t(tape, mul(tape, diff, diff));
}

Tensor lkd_loss(Tape& tape, std::span<const double> old_logits,
                const Tensor& cl_logits_old, double temperature) {
  if (old_logits.size() != cl_logits_old.size())
    throw std::invalid_argument("lkd_loss: length mismatch");
  std::vector<double> teacher = softmax_values(old_logits, temperature);
  Tensor student = softmax_temp(tape, cl_logits_old, temperature);
  Tensor soft_ce = weighted_sum(tape, log_t(tape, student), teacher);
  return scale(tape, soft_ce, -1.0);
}

}  // namespace cldistill
