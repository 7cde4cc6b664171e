// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "usd/tensor.hpp"

namespace usd {

// Additive mask value for excluded softmax positions.
inline constexpr double kMaskValue = -1e30;

// Probabilities are clamped into [kProbEps, 1 - kProbEps] before any log.
inline constexpr double kProbEps = 1e-12;

// Ordered, named collection of tensors. Used both for model parameters and
// for their gradients (same names, same shapes).
class ParameterSet {
 public:
  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  Tensor& get(std::string_view name) { return values_[index_of(name)]; }
  const Tensor& get(std::string_view name) const { return values_[index_of(name)]; }
  Tensor& at(std::size_t i) { return values_[i]; }
  const Tensor& at(std::size_t i) const { return values_[i]; }

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  std::size_t total_elements() const;

  // Zero tensors with the same names and shapes.
  ParameterSet zeros_like() const;
  // Copies every tensor whose name starts with `prefix`.
  ParameterSet subset(std::string_view prefix) const;
  // Adds or overwrites every entry of `other`.
  void merge(const ParameterSet& other);

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

using Gradients = ParameterSet;

struct NodeId {
  std::uint32_t index = UINT32_MAX;
  friend bool operator==(NodeId, NodeId) = default;
};

// Tape of tensor operations recorded in evaluation order, with reverse-mode
// differentiation back to the bound ParameterSet.
//
// Shape rules (no implicit broadcasting anywhere):
//   matmul      [m,k]x[k,n] -> [m,n];  [b,m,k]x[b,k,n] -> [b,m,n]
//   add, mul    identical shapes
//   add_bias    [..., k] + [k]  (the bias is added to every row)
//   softmax     over the last axis; optional additive mask with the same shape
//               as x or equal to its trailing dims (then reused for every
//               leading index, e.g. one [T,T] causal mask for [B,T,T] scores).
//               A row whose mask is entirely kMaskValue yields all zeros.
//   mean        removes `axis`
//   embedding   table [r,d], row ids -> [len(ids), d]
//   concat      along the last axis; all leading dims equal
//   transpose   swaps the last two axes
//   take        selects `index` along `axis` and removes that axis
//   layer_norm  normalizes the last axis; gain and bias are [k]
//   bce         probs and labels/weights of equal element count -> [1]
//
// A Graph borrows its ParameterSet, which must outlive it. Parameter values
// are read when `param` is first called for a name.
class Graph {
 public:
  explicit Graph(const ParameterSet& params) : params_(&params) {}

  NodeId param(std::string_view name);
  NodeId constant(Tensor value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId add_bias(NodeId x, NodeId bias);
  NodeId sigmoid(NodeId x);
  NodeId relu(NodeId x);
  NodeId softmax(NodeId x);
  NodeId softmax(NodeId x, const Tensor& additive_mask);
  NodeId mean(NodeId x, std::size_t axis);
  NodeId embedding(NodeId table, std::span<const std::size_t> rows);
  NodeId concat(std::span<const NodeId> parts);
  NodeId reshape(NodeId x, Shape shape);
  NodeId transpose(NodeId x);
  NodeId take(NodeId x, std::size_t axis, std::size_t index);
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, double eps);
  // Weighted mean binary cross-entropy: (1/n) sum_i w_i e(y_i, clamp(p_i)).
  NodeId bce(NodeId probs, Tensor labels, Tensor weights);

  const Tensor& value(NodeId id) const;
  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Gradient of the single-element `output` with respect to every bound
  // parameter. Parameters the output does not depend on get exact zeros.
  Gradients backward(NodeId output);

 private:
  enum class Op {
    param,
    constant,
    matmul,
    add,
    mul,
    scale,
    add_bias,
    sigmoid,
    relu,
    softmax,
    mean,
    embedding,
    concat,
    reshape,
    transpose,
    take,
    layer_norm,
    bce,
  };

  struct Node {
    Op op = Op::constant;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor grad;  // empty until something flows in
    Tensor aux;   // mask / labels / normalized activations
    Tensor aux2;  // weights / inverse std
    std::vector<std::size_t> rows;
    double scalar = 0.0;
    std::size_t axis = 0;
    std::size_t index = 0;
    std::size_t param_slot = SIZE_MAX;
  };

  const Node& node(NodeId id) const;
  NodeId push(Node n);
  void accumulate(NodeId id, const double* g, std::size_t n);
  // Takes ownership of `g` when nothing has flowed into `id` yet.
  void accumulate(NodeId id, Tensor&& g);
  void backward_node(std::size_t i);

  const ParameterSet* params_;
  std::vector<Node> nodes_;
  std::map<std::size_t, NodeId> param_nodes_;
};

}  // namespace usd
