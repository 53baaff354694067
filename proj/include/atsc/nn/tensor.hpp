/*
 * Copyright 2026 The ATSC Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace atsc::nn {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVector = Eigen::Matrix<S, 1, Eigen::Dynamic>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using Shape = std::vector<Index>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

inline Index numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<>());
}

/// Dense tensor handle. Values live in a row-major matrix whose column count
/// is the last dimension, so every op works on the last axis. Copies share the
/// same storage; use clone() for a deep copy.
template <typename S>
class Tensor {
 public:
  struct Node {
    Shape shape;
    Matrix<S> value;
    Matrix<S> grad;  // allocated iff requires_grad
    bool requires_grad = false;
  };

  Tensor() = default;

  /// Rank-2 tensor with the matrix's shape.
  explicit Tensor(Matrix<S> value, bool requires_grad = false) : node_(std::make_shared<Node>()) {
    node_->shape = Shape{value.rows(), value.cols()};
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->grad = Matrix<S>::Zero(node_->value.rows(), node_->value.cols());
  }

  Tensor(Shape shape, Matrix<S> value, bool requires_grad = false) : node_(std::make_shared<Node>()) {
    const Index cols = shape.empty() ? 1 : shape.back();
    if (cols == 0 || numel(shape) != value.size() || value.cols() != cols) {
      throw ShapeError("tensor shape " + shape_string(shape) + " does not match a " + std::to_string(value.rows()) +
                       "x" + std::to_string(value.cols()) + " buffer");
    }
    node_->shape = std::move(shape);
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->grad = Matrix<S>::Zero(node_->value.rows(), node_->value.cols());
  }

  static Tensor scalar(S v, bool requires_grad = false) {
    Matrix<S> m(1, 1);
    m(0, 0) = v;
    return Tensor(Shape{}, std::move(m), requires_grad);
  }
  static Tensor vector(const RowVector<S>& v, bool requires_grad = false) {
    return Tensor(Shape{v.size()}, Matrix<S>(v), requires_grad);
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const Index cols = shape.empty() ? 1 : shape.back();
    const Index rows = cols == 0 ? 0 : numel(shape) / cols;
    return Tensor(std::move(shape), Matrix<S>::Zero(rows, cols), requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  const Matrix<S>& value() const { return node_->value; }
  Matrix<S>& value_mut() const { return node_->value; }
  const Matrix<S>& grad() const { return node_->grad; }
  Matrix<S>& grad_mut() const { return node_->grad; }
  S item() const {
    if (size() != 1) throw ShapeError("item() on a tensor of shape " + shape_string(shape()));
    return node_->value(0, 0);
  }

  void zero_grad() const {
    if (node_->requires_grad) node_->grad.setZero();
  }

  /// Same values, cut off from any gradient.
  Tensor detach() const { return Tensor(shape(), value(), false); }
  Tensor clone() const { return Tensor(shape(), value(), requires_grad()); }

  const std::shared_ptr<Node>& node() const { return node_; }
  bool same_as(const Tensor& o) const { return node_ == o.node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Records differentiable operations in execution order. A tape that is not
/// recording produces constant outputs and stores nothing (inference mode).
template <typename S>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  std::size_t size() const { return entries_.size(); }
  void clear() {
    entries_.clear();
    ran_backward_ = false;
  }

  void record(const Tensor<S>& output, std::function<void()> backward_fn) {
    entries_.push_back({output.node(), std::move(backward_fn)});
  }

  /// Reverse pass from a scalar loss. Intermediate gradients are reset first,
  /// so leaves accumulate across repeated calls.
  void backward(const Tensor<S>& loss) {
    if (loss.size() != 1) throw ShapeError("backward needs a scalar loss, got " + shape_string(loss.shape()));
    if (!loss.requires_grad()) return;
    // Fresh outputs start with zero gradients, so only a repeat pass resets.
    if (ran_backward_) {
      for (auto& e : entries_) e.output->grad.setZero();
    }
    ran_backward_ = true;
    loss.grad_mut()(0, 0) += S(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->backward();
  }

 private:
  struct Entry {
    std::shared_ptr<typename Tensor<S>::Node> output;
    std::function<void()> backward;
  };
  bool recording_;
  bool ran_backward_ = false;
  std::vector<Entry> entries_;
};

template <typename S>
void backward(const Tensor<S>& loss, Tape<S>& tape) {
  tape.backward(loss);
}

}  // namespace atsc::nn
