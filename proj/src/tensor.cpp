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

#include "mspe/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace mspe {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(shape, 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  return from_array(shape, Eigen::ArrayXf::Constant(shape.numel(), value), requires_grad);
}

Tensor Tensor::from_array(Shape shape, Eigen::ArrayXf values, bool requires_grad) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw std::invalid_argument("negative tensor dimension in " + shape.str());
  }
  if (values.size() != shape.numel()) {
    throw std::invalid_argument("tensor data length " + std::to_string(values.size()) +
                                " does not match shape " + shape.str());
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(float value, bool requires_grad) { return full({1, 1, 1, 1}, value, requires_grad); }

float Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item() on tensor of shape " + shape().str());
  return node_->value[0];
}

Tensor Tensor::detach() const { return from_array(shape(), data()); }

Tensor Tensor::make_result(Shape shape, Eigen::ArrayXf value, std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(value);
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.defined() && t.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    for (auto& t : inputs) node->inputs.push_back(t.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss");
  }
  // Iterative post-order DFS gives a topological order with inputs first.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child && child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer().setOnes();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (!node->backward || node->grad.size() == 0) continue;
    node->backward(*node);
    node->grad.resize(0);  // intermediate gradients are not kept
  }
}

bool all_finite(const Tensor& t) { return t.data().isFinite().all(); }

void check_finite(const Tensor& t, const std::string& what) {
  if (!all_finite(t)) throw NumericError("non-finite values detected in " + what);
}

}  // namespace mspe
