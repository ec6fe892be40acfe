// SPDX-License-Identifier: Apache-2.0
#include "cldistill/tensor.h"

#include <stdexcept>
#include <utility>

namespace cldistill {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw std::invalid_argument("tensor shape has zero extent");
    n *= e;
  }
  return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t;
  t.d_ = std::make_shared<Data>();
  t.d_->values.assign(shape_numel(shape), value);
  t.d_->shape = std::move(shape);
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  if (shape_numel(shape) != values.size())
    throw std::invalid_argument("tensor shape does not match value count");
  Tensor t;
  t.d_ = std::make_shared<Data>();
  t.d_->shape = std::move(shape);
  t.d_->values = std::move(values);
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!d_) throw std::logic_error("use of undefined tensor");
  return d_->shape;
}

std::size_t Tensor::size() const {
  if (!d_) throw std::logic_error("use of undefined tensor");
  return d_->values.size();
}

std::size_t Tensor::rows() const {
  if (shape().size() != 2) throw std::invalid_argument("rows(): tensor is not 2-D");
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (shape().size() != 2) throw std::invalid_argument("cols(): tensor is not 2-D");
  return shape()[1];
}

double Tensor::value() const {
  if (size() != 1) throw std::invalid_argument("value(): tensor is not scalar");
  return d_->values[0];
}

double Tensor::at(std::size_t flat_index) const {
  return d_->values.at(flat_index);
}

double& Tensor::at(std::size_t flat_index) {
  return d_->values.at(flat_index);
}

std::span<const double> Tensor::data() const {
  if (!d_) throw std::logic_error("use of undefined tensor");
  return {d_->values.data(), d_->values.size()};
}

std::span<double> Tensor::data() {
  if (!d_) throw std::logic_error("use of undefined tensor");
  return {d_->values.data(), d_->values.size()};
}

bool Tensor::requires_grad() const { return d_ && d_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (!d_) throw std::logic_error("use of undefined tensor");
  d_->requires_grad = value;
}

bool Tensor::has_grad() const { return d_ && !d_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no accumulated gradient");
  return {d_->grad.data(), d_->grad.size()};
}

std::span<double> Tensor::grad_mut() {
  if (!d_) throw std::logic_error("use of undefined tensor");
  if (d_->grad.empty()) d_->grad.assign(d_->values.size(), 0.0);
  return {d_->grad.data(), d_->grad.size()};
}

void Tensor::zero_grad() {
  if (d_) d_->grad.clear();
}

Tensor Tensor::clone(bool requires_grad) const {
  if (!d_) throw std::logic_error("use of undefined tensor");
  Tensor t;
  t.d_ = std::make_shared<Data>();
  t.d_->shape = d_->shape;
  t.d_->values = d_->values;
  t.d_->requires_grad = requires_grad;
  return t;
}

const Tape* Tensor::producer() const { return d_ ? d_->producer : nullptr; }

void Tape::record(Tensor& output, std::function<void()> backward_step) {
  output.d_->producer = this;
  steps_.push_back(std::move(backward_step));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  if (loss.producer() != this)
    throw std::invalid_argument("backward: loss was not produced on this tape");
  Tensor seed = loss;  // shared handle
  seed.grad_mut()[0] += 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace cldistill
