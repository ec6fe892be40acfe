// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cldistill/tensor.h"

namespace cldistill {

// Differentiable ops. Each records its backward step on the tape when the
// tape is recording and at least one input requires a gradient. Gradients
// accumulate additively, so a tensor used twice receives both contributions.

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(Tape& tape, const Tensor& a, double c);

Tensor tanh_t(Tape& tape, const Tensor& a);
Tensor sigmoid_t(Tape& tape, const Tensor& a);
Tensor log_t(Tape& tape, const Tensor& a);  // requires strictly positive input
Tensor abs_t(Tape& tape, const Tensor& a);

/// W [m,n] times x [n] -> [m].
Tensor matvec(Tape& tape, const Tensor& w, const Tensor& x);
/// W [m,n] times x [n] plus b [m] -> [m].
Tensor linear(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& b);
/// Applies the same dense layer to every row: X [L,n] -> [L,m].
Tensor rows_linear(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& b);
/// Row lookup: E [v,d], ids in [0,v) -> [ids.size(), d].
Tensor embedding_rows(Tape& tape, const Tensor& table, std::span<const int> ids);
/// Stacks 1-D [d] rows and 2-D [k,d] blocks into one [L,d] map.
Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);

Tensor mean_rows(Tape& tape, const Tensor& x);              // [L,d] -> [d]
Tensor broadcast_rows(Tape& tape, const Tensor& v, std::size_t rows);  // [d] -> [L,d]

Tensor sum_t(Tape& tape, const Tensor& a);   // -> scalar
Tensor mean_t(Tape& tape, const Tensor& a);  // -> scalar
Tensor index_t(Tape& tape, const Tensor& a, std::size_t i);        // -> scalar
Tensor gather_t(Tape& tape, const Tensor& a, std::span<const int> idx);
/// Dot product against a constant weight vector -> scalar.
Tensor weighted_sum(Tape& tape, const Tensor& a, std::span<const double> weights);

// Scalar-only ops used by the box geometry. Ties route the gradient to the
// first argument.
Tensor smin(Tape& tape, const Tensor& a, const Tensor& b);
Tensor smax(Tape& tape, const Tensor& a, const Tensor& b);
Tensor div_s(Tape& tape, const Tensor& a, const Tensor& b);  // b must be nonzero

/// Max-shifted softmax of logits/T. T must be positive.
Tensor softmax_temp(Tape& tape, const Tensor& logits, double temperature);
/// log(sum(exp(logits))) via the max-shift trick -> scalar.
Tensor log_sum_exp(Tape& tape, const Tensor& logits);

/// Plain-value softmax of logits/T (no tape involvement).
std::vector<double> softmax_values(std::span<const double> logits, double temperature);

/// Sum p_i * ln(p_i / q_i) with the 0*ln(0/q) = 0 convention. Both inputs
/// must be probability vectors (sum 1 within 1e-6); q_i must be positive
/// wherever p_i is.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const Tensor& p, const Tensor& q);

/// Compares the tape gradient of f at x against central differences with
/// step h. Returns max over coordinates of
/// |analytic - central| / (|central| + 1e-12).
double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                         const Tensor& x, double h);

}  // namespace cldistill
