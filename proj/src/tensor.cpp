// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "usd/error.hpp"

namespace usd {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (shape_size(shape_) != values_.size()) {
    throw ShapeError("shape " + shape_str(shape_) + " needs " + std::to_string(shape_size(shape_)) +
                     " values, got " + std::to_string(values_.size()));
  }
}

Tensor Tensor::filled(Shape shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (values_.size() != 1) throw ShapeError("item() on non-scalar " + shape_str(shape_));
  return values_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), values_);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

}  // namespace usd
