// Copyright 2026 The MSPE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense NCHW float tensors with tape-free reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Operations on tensors that
// require gradients record their inputs and a backward closure; backward()
// walks the resulting graph in reverse topological order.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mspe {

struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  std::int64_t numel() const { return static_cast<std::int64_t>(n) * c * h * w; }
  std::int64_t plane() const { return static_cast<std::int64_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Thrown when a validation pass finds NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Node {
  Shape shape;
  Eigen::ArrayXf value;
  Eigen::ArrayXf grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Eigen::ArrayXf& grad_buffer() {
    if (grad.size() == 0) grad = Eigen::ArrayXf::Zero(value.size());
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_array(Shape shape, Eigen::ArrayXf values, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return node_->shape.numel(); }

  Eigen::ArrayXf& data() { return node_->value; }
  const Eigen::ArrayXf& data() const { return node_->value; }

  float& at(int n, int c, int h, int w) { return node_->value[index(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const { return node_->value[index(n, c, h, w)]; }
  float item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return node_->grad.size() != 0; }
  /// Gradient buffer; zeros if nothing has been accumulated yet.
  const Eigen::ArrayXf& grad() const { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.resize(0); }

  /// Copy of the values without graph history.
  Tensor detach() const;

  std::int64_t index(int n, int c, int h, int w) const {
    const Shape& s = node_->shape;
    return ((static_cast<std::int64_t>(n) * s.c + c) * s.h + h) * s.w + w;
  }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

  /// Builds an op result; records the graph only when some input needs grad.
  static Tensor make_result(Shape shape, Eigen::ArrayXf value, std::vector<Tensor> inputs,
                            std::function<void(detail::Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Populates grad of every requires_grad leaf reachable from a scalar loss.
void backward(const Tensor& loss);

bool all_finite(const Tensor& t);
/// Throws NumericError naming `what` if t holds NaN or Inf.
void check_finite(const Tensor& t, const std::string& what);

}  // namespace mspe
