// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace cldistill {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);

class Tape;

/// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
/// Copies share storage (handle semantics); clone() makes a deep copy.
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rows() const;  // extent 0 of a 2-D tensor
  std::size_t cols() const;  // extent 1 of a 2-D tensor

  double value() const;  // scalar tensors only
  double at(std::size_t flat_index) const;
  double& at(std::size_t flat_index);

  std::span<const double> data() const;
  std::span<double> data();

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  std::span<const double> grad() const;  // throws if no grad accumulated yet
  std::span<double> grad_mut();          // allocates zero-filled buffer on demand
  void zero_grad();                      // drops the gradient buffer

  /// Deep copy: fresh storage, no gradient buffer, not attached to any tape.
  Tensor clone(bool requires_grad = false) const;

  /// True if both handles point at the same storage.
  bool same_storage(const Tensor& other) const { return d_ == other.d_; }

  const Tape* producer() const;

private:
  friend class Tape;
  struct Data {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    const Tape* producer = nullptr;  // tape whose op created this tensor
  };
  std::shared_ptr<Data> d_;
};

/// Wengert list: backward closures recorded in execution order. One tape per
/// forward/backward pass; not thread-safe across concurrent recorders.
class Tape {
public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return steps_.size(); }
  void clear() { steps_.clear(); }

  /// Used by ops: registers the backward step and marks the op output as
  /// produced on this tape.
  void record(Tensor& output, std::function<void()> backward_step);

  /// Seeds d(loss)/d(loss) = 1 and replays recorded steps in reverse,
  /// accumulating into the grad buffers of every requires_grad tensor.
  void backward(const Tensor& loss);

private:
  bool recording_;
  std::vector<std::function<void()>> steps_;
};

/// Free-function form of Tape::backward.
void backward(const Tensor& loss, Tape& tape);

}  // namespace cldistill
