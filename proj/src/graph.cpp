// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/graph.hpp"

#include <algorithm>
#include <cmath>

#include "usd/error.hpp"
#include "usd/kernels/kernels.hpp"

namespace usd {

// ---------------------------------------------------------------------------
// ParameterSet

void ParameterSet::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterSet::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& t : values_) n += t.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], Tensor(values_[i].shape()));
  return out;
}

ParameterSet ParameterSet::subset(std::string_view prefix) const {
  ParameterSet out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].starts_with(prefix)) out.add(names_[i], values_[i]);
  }
  return out;
}

void ParameterSet::merge(const ParameterSet& other) {
  for (std::size_t i = 0; i < other.size(); ++i) {
    if (contains(other.names_[i])) {
      get(other.names_[i]) = other.values_[i];
    } else {
      add(other.names_[i], other.values_[i]);
    }
  }
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

// dst[n,m] = src[m,n]ᵀ
void transpose2d(const double* src, std::size_t m, std::size_t n, double* dst) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
  }
}

// Splits `shape` around `axis` into (outer, len, inner) element counts.
struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool row_fully_masked(const double* mask, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    if (mask[j] > kMaskValue * 0.5) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph construction

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw UsageError("node " + std::to_string(id.index) + " does not belong to this graph");
  }
  return nodes_[id.index];
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Graph::param(std::string_view name) {
  const std::size_t slot = params_->index_of(name);
  if (auto it = param_nodes_.find(slot); it != param_nodes_.end()) return it->second;
  Node n;
  n.op = Op::param;
  n.value = params_->at(slot);
  n.param_slot = slot;
  const NodeId id = push(std::move(n));
  param_nodes_.emplace(slot, id);
  return id;
}

NodeId Graph::constant(Tensor value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  const auto& kern = kernels::active();
  Tensor C;
  if (A.rank() == 2 && B.rank() == 2) {
    if (A.dim(1) != B.dim(0)) shape_mismatch("matmul", A.shape(), B.shape());
    C = Tensor({A.dim(0), B.dim(1)});
    kern.gemm(A.dim(0), B.dim(1), A.dim(1), A.data(), B.data(), C.data());
  } else if (A.rank() == 3 && B.rank() == 3) {
    if (A.dim(0) != B.dim(0) || A.dim(2) != B.dim(1)) shape_mismatch("matmul", A.shape(), B.shape());
    const std::size_t batch = A.dim(0), m = A.dim(1), k = A.dim(2), n = B.dim(2);
    C = Tensor({batch, m, n});
    for (std::size_t i = 0; i < batch; ++i) {
      kern.gemm(m, n, k, A.data() + i * m * k, B.data() + i * k * n, C.data() + i * m * n);
    }
  } else {
    shape_mismatch("matmul", A.shape(), B.shape());
  }
  Node n;
  n.op = Op::matmul;
  n.inputs = {a, b};
  n.value = std::move(C);
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (A.shape() != B.shape()) shape_mismatch("add", A.shape(), B.shape());
  Tensor C(A.shape());
  kernels::active().add(A.size(), A.data(), B.data(), C.data());
  Node n;
  n.op = Op::add;
  n.inputs = {a, b};
  n.value = std::move(C);
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (A.shape() != B.shape()) shape_mismatch("mul", A.shape(), B.shape());
  Tensor C(A.shape());
  kernels::active().mul(A.size(), A.data(), B.data(), C.data());
  Node n;
  n.op = Op::mul;
  n.inputs = {a, b};
  n.value = std::move(C);
  return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double c) {
  Tensor out = node(x).value;
  for (double& v : out.values()) v *= c;
  Node n;
  n.op = Op::scale;
  n.inputs = {x};
  n.scalar = c;
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::add_bias(NodeId x, NodeId bias) {
  const Tensor& X = node(x).value;
  const Tensor& b = node(bias).value;
  const std::size_t k = X.shape().back();
  if (b.rank() != 1 || b.dim(0) != k) shape_mismatch("add_bias", X.shape(), b.shape());
  Tensor out(X.shape());
  const std::size_t rows = X.size() / k;
  const auto& kern = kernels::active();
  for (std::size_t r = 0; r < rows; ++r) kern.add(k, X.data() + r * k, b.data(), out.data() + r * k);
  Node n;
  n.op = Op::add_bias;
  n.inputs = {x, bias};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
  Tensor out = node(x).value;
  for (double& v : out.values()) v = stable_sigmoid(v);
  Node n;
  n.op = Op::sigmoid;
  n.inputs = {x};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
  Tensor out = node(x).value;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  Node n;
  n.op = Op::relu;
  n.inputs = {x};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::softmax(NodeId x) { return softmax(x, Tensor()); }

NodeId Graph::softmax(NodeId x, const Tensor& additive_mask) {
  const Tensor& X = node(x).value;
  const std::size_t k = X.shape().back();
  const std::size_t rows = X.size() / k;
  // The mask covers either all of X or a trailing block that repeats.
  const std::size_t mask_rows = additive_mask.empty() ? 0 : additive_mask.size() / k;
  if (!additive_mask.empty()) {
    const Shape& ms = additive_mask.shape();
    const Shape& xs = X.shape();
    const bool trailing = ms.size() <= xs.size() && std::equal(ms.rbegin(), ms.rend(), xs.rbegin());
    if (!trailing) shape_mismatch("softmax mask", xs, ms);
  }
  Tensor out(X.shape());
  std::vector<double> v(k);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = X.data() + r * k;
    const double* mr = mask_rows ? additive_mask.data() + (r % mask_rows) * k : nullptr;
    double* pr = out.data() + r * k;
    if (mr && row_fully_masked(mr, k)) continue;  // stays all zeros
    double mx = -INFINITY;
    for (std::size_t j = 0; j < k; ++j) {
      v[j] = mr ? xr[j] + mr[j] : xr[j];
      mx = std::max(mx, v[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      // exp underflows to exactly 0 below this, so skipping it changes nothing.
      const double z = v[j] - mx;
      pr[j] = z < -746.0 ? 0.0 : std::exp(z);
      sum += pr[j];
    }
    for (std::size_t j = 0; j < k; ++j) pr[j] /= sum;
  }
  Node n;
  n.op = Op::softmax;
  n.inputs = {x};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::mean(NodeId x, std::size_t axis) {
  const Tensor& X = node(x).value;
  if (axis >= X.rank()) throw ShapeError("mean: axis " + std::to_string(axis) + " out of range for " + shape_str(X.shape()));
  const AxisSplit s = split_axis(X.shape(), axis);
  Tensor out(drop_axis(X.shape(), axis));
  const double inv = 1.0 / static_cast<double>(s.len);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      double sum = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) sum += X[(o * s.len + l) * s.inner + i];
      out[o * s.inner + i] = sum * inv;
    }
  }
  Node n;
  n.op = Op::mean;
  n.inputs = {x};
  n.axis = axis;
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::embedding(NodeId table, std::span<const std::size_t> rows) {
  const Tensor& T = node(table).value;
  if (T.rank() != 2) throw ShapeError("embedding: table must be rank 2, got " + shape_str(T.shape()));
  if (rows.empty()) throw ShapeError("embedding: empty row list");
  const std::size_t d = T.dim(1);
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= T.dim(0)) {
      throw InputError("embedding: row " + std::to_string(rows[i]) + " out of range for table " +
                       shape_str(T.shape()));
    }
    std::copy_n(T.data() + rows[i] * d, d, out.data() + i * d);
  }
  Node n;
  n.op = Op::embedding;
  n.inputs = {table};
  n.rows.assign(rows.begin(), rows.end());
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::concat(std::span<const NodeId> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = node(parts[0]).value.shape();
  Shape lead(first.begin(), first.end() - 1);
  std::size_t total = 0;
  for (NodeId p : parts) {
    const Shape& s = node(p).value.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      shape_mismatch("concat", first, s);
    }
    total += s.back();
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor out(out_shape);
  const std::size_t rows = out.size() / total;
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor& P = node(p).value;
    const std::size_t k = P.shape().back();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(P.data() + r * k, k, out.data() + r * total + offset);
    offset += k;
  }
  Node n;
  n.op = Op::concat;
  n.inputs.assign(parts.begin(), parts.end());
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId x, Shape shape) {
  Tensor out = node(x).value.reshaped(std::move(shape));
  Node n;
  n.op = Op::reshape;
  n.inputs = {x};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::transpose(NodeId x) {
  const Tensor& X = node(x).value;
  if (X.rank() < 2) throw ShapeError("transpose: need rank >= 2, got " + shape_str(X.shape()));
  Shape s = X.shape();
  const std::size_t m = s[s.size() - 2], k = s.back();
  std::swap(s[s.size() - 2], s.back());
  Tensor out(s);
  const std::size_t batch = X.size() / (m * k);
  for (std::size_t b = 0; b < batch; ++b) transpose2d(X.data() + b * m * k, m, k, out.data() + b * m * k);
  Node n;
  n.op = Op::transpose;
  n.inputs = {x};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::take(NodeId x, std::size_t axis, std::size_t index) {
  const Tensor& X = node(x).value;
  if (axis >= X.rank() || index >= X.dim(axis)) {
    throw ShapeError("take: index " + std::to_string(index) + " on axis " + std::to_string(axis) +
                     " out of range for " + shape_str(X.shape()));
  }
  const AxisSplit s = split_axis(X.shape(), axis);
  Tensor out(drop_axis(X.shape(), axis));
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(X.data() + (o * s.len + index) * s.inner, s.inner, out.data() + o * s.inner);
  }
  Node n;
  n.op = Op::take;
  n.inputs = {x};
  n.axis = axis;
  n.index = index;
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::layer_norm(NodeId x, NodeId gain, NodeId bias, double eps) {
  const Tensor& X = node(x).value;
  const Tensor& g = node(gain).value;
  const Tensor& b = node(bias).value;
  const std::size_t k = X.shape().back();
  if (g.shape() != Shape{k}) shape_mismatch("layer_norm gain", X.shape(), g.shape());
  if (b.shape() != Shape{k}) shape_mismatch("layer_norm bias", X.shape(), b.shape());
  const std::size_t rows = X.size() / k;
  Tensor out(X.shape());
  Tensor xhat(X.shape());
  Tensor inv_std({rows});
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = X.data() + r * k;
    double mu = 0.0;
    for (std::size_t j = 0; j < k; ++j) mu += xr[j];
    mu *= inv_k;
    double var = 0.0;
    for (std::size_t j = 0; j < k; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var *= inv_k;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < k; ++j) {
      const double h = (xr[j] - mu) * is;
      xhat[r * k + j] = h;
      out[r * k + j] = g[j] * h + b[j];
    }
  }
  Node n;
  n.op = Op::layer_norm;
  n.inputs = {x, gain, bias};
  n.value = std::move(out);
  n.aux = std::move(xhat);
  n.aux2 = std::move(inv_std);
  return push(std::move(n));
}

NodeId Graph::bce(NodeId probs, Tensor labels, Tensor weights) {
  const Tensor& P = node(probs).value;
  if (labels.size() != P.size()) shape_mismatch("bce labels", P.shape(), labels.shape());
  if (weights.size() != P.size()) shape_mismatch("bce weights", P.shape(), weights.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double p = std::clamp(P[i], kProbEps, 1.0 - kProbEps);
    const double y = labels[i];
    const double e = -y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
    sum += weights[i] * e;
  }
  Node n;
  n.op = Op::bce;
  n.inputs = {probs};
  n.value = Tensor::scalar(sum / static_cast<double>(P.size()));
  n.aux = std::move(labels);
  n.aux2 = std::move(weights);
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// Reverse pass

void Graph::accumulate(NodeId id, Tensor&& g) {
  Node& dst = nodes_[id.index];
  if (dst.op == Op::constant) return;
  if (dst.grad.empty() && g.shape() == dst.value.shape()) {
    dst.grad = std::move(g);
    return;
  }
  accumulate(id, g.data(), g.size());
}

void Graph::accumulate(NodeId id, const double* g, std::size_t n) {
  Node& dst = nodes_[id.index];
  if (dst.op == Op::constant) return;
  if (dst.grad.empty()) dst.grad = Tensor(dst.value.shape());
  kernels::active().axpy(n, 1.0, g, dst.grad.data());
}

Gradients Graph::backward(NodeId output) {
  if (nodes_.empty()) throw UsageError("backward called before any forward op was recorded");
  const Node& out = node(output);
  if (out.value.size() != 1) {
    throw UsageError("backward needs a single-element output, got " + shape_str(out.value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  const double one = 1.0;
  accumulate(output, &one, 1);
  for (std::size_t i = output.index + 1; i-- > 0;) {
    if (!nodes_[i].grad.empty()) backward_node(i);
  }
  Gradients grads = params_->zeros_like();
  for (const auto& [slot, id] : param_nodes_) {
    const Node& n = nodes_[id.index];
    if (!n.grad.empty()) grads.at(slot) = n.grad;
  }
  return grads;
}

void Graph::backward_node(std::size_t i) {
  // accumulate() only writes to earlier nodes and never grows nodes_.
  const Node& n = nodes_[i];
  const Tensor& G = n.grad;
  const auto& kern = kernels::active();

  switch (n.op) {
    case Op::param:
    case Op::constant:
      return;

    case Op::matmul: {
      const Tensor& A = nodes_[n.inputs[0].index].value;
      const Tensor& B = nodes_[n.inputs[1].index].value;
      const bool batched = A.rank() == 3;
      const std::size_t batch = batched ? A.dim(0) : 1;
      const std::size_t m = A.dim(A.rank() - 2), k = A.dim(A.rank() - 1), nn = B.dim(B.rank() - 1);
      Tensor dA(A.shape()), dB(B.shape());
      std::vector<double> t_b(k * nn), t_a(m * k);
      for (std::size_t b = 0; b < batch; ++b) {
        const double* a = A.data() + b * m * k;
        const double* bb = B.data() + b * k * nn;
        const double* g = G.data() + b * m * nn;
        transpose2d(bb, k, nn, t_b.data());
        kern.gemm(m, k, nn, g, t_b.data(), dA.data() + b * m * k);
        transpose2d(a, m, k, t_a.data());
        kern.gemm(k, nn, m, t_a.data(), g, dB.data() + b * k * nn);
      }
      accumulate(n.inputs[0], std::move(dA));
      accumulate(n.inputs[1], std::move(dB));
      return;
    }

    case Op::add:
      accumulate(n.inputs[0], G.data(), G.size());
      accumulate(n.inputs[1], G.data(), G.size());
      return;

    case Op::mul: {
      const Tensor& A = nodes_[n.inputs[0].index].value;
      const Tensor& B = nodes_[n.inputs[1].index].value;
      Tensor t(G.shape());
      kern.mul(G.size(), G.data(), B.data(), t.data());
      accumulate(n.inputs[0], t.data(), t.size());
      kern.mul(G.size(), G.data(), A.data(), t.data());
      accumulate(n.inputs[1], std::move(t));
      return;
    }

    case Op::scale: {
      Tensor t = G;
      for (double& v : t.values()) v *= n.scalar;
      accumulate(n.inputs[0], std::move(t));
      return;
    }

    case Op::add_bias: {
      accumulate(n.inputs[0], G.data(), G.size());
      const std::size_t k = G.shape().back();
      const std::size_t rows = G.size() / k;
      std::vector<double> db(k, 0.0);
      for (std::size_t r = 0; r < rows; ++r) kern.axpy(k, 1.0, G.data() + r * k, db.data());
      accumulate(n.inputs[1], db.data(), k);
      return;
    }

    case Op::sigmoid: {
      Tensor t(G.shape());
      for (std::size_t j = 0; j < t.size(); ++j) {
        const double s = n.value[j];
        t[j] = G[j] * s * (1.0 - s);
      }
      accumulate(n.inputs[0], std::move(t));
      return;
    }

    case Op::relu: {
      const Tensor& X = nodes_[n.inputs[0].index].value;
      Tensor t(G.shape());
      for (std::size_t j = 0; j < t.size(); ++j) t[j] = X[j] > 0.0 ? G[j] : 0.0;
      accumulate(n.inputs[0], std::move(t));
      return;
    }

    case Op::softmax: {
      const std::size_t k = G.shape().back();
      const std::size_t rows = G.size() / k;
      Tensor t(G.shape());
      for (std::size_t r = 0; r < rows; ++r) {
        const double* p = n.value.data() + r * k;
        const double* g = G.data() + r * k;
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += g[j] * p[j];
        for (std::size_t j = 0; j < k; ++j) t[r * k + j] = p[j] * (g[j] - dot);
      }
      accumulate(n.inputs[0], std::move(t));
      return;
    }

    case Op::mean: {
      const Tensor& X = nodes_[n.inputs[0].index].value;
      const AxisSplit s = split_axis(X.shape(), n.axis);
      const double inv = 1.0 / static_cast<double>(s.len);
      Tensor t(X.shape());
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t l = 0; l < s.len; ++l) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            t[(o * s.len + l) * s.inner + in] = G[o * s.inner + in] * inv;
          }
        }
      }
      accumulate(n.inputs[0], std::move(t));
      return;
    }

    case Op::embedding: {
      const Tensor& T = nodes_[n.inputs[0].index].value;
      const std::size_t d = T.dim(1);
      Tensor t(T.shape());
      for (std::size_t r = 0; r < n.rows.size(); ++r) {
        kern.axpy(d, 1.0, G.data() + r * d, t.data() + n.rows[r] * d);
      }
      accumulate(n.inputs[0], std::move(t));
      return;
    }

    case Op::concat: {
      const std::size_t total = G.shape().back();
      const std::size_t rows = G.size() / total;
      std::size_t offset = 0;
      for (NodeId p : n.inputs) {
        const std::size_t k = nodes_[p.index].value.shape().back();
        Tensor t(nodes_[p.index].value.shape());
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(G.data() + r * total + offset, k, t.data() + r * k);
        accumulate(p, t.data(), t.size());
        offset += k;
      }
      return;
    }

    case Op::reshape:
      accumulate(n.inputs[0], G.data(), G.size());
      return;

    case Op::transpose: {
      const Shape& s = G.shape();
      const std::size_t m = s[s.size() - 2], k = s.back();
      const std::size_t batch = G.size() / (m * k);
      Tensor t(nodes_[n.inputs[0].index].value.shape());
      for (std::size_t b = 0; b < batch; ++b) transpose2d(G.data() + b * m * k, m, k, t.data() + b * m * k);
      accumulate(n.inputs[0], std::move(t));
      return;
    }

    case Op::take: {
      const Tensor& X = nodes_[n.inputs[0].index].value;
      const AxisSplit s = split_axis(X.shape(), n.axis);
      Tensor t(X.shape());
      for (std::size_t o = 0; o < s.outer; ++o) {
        std::copy_n(G.data() + o * s.inner, s.inner, t.data() + (o * s.len + n.index) * s.inner);
      }
      accumulate(n.inputs[0], std::move(t));
      return;
    }

    case Op::layer_norm: {
      const Tensor& g = nodes_[n.inputs[1].index].value;
      const std::size_t k = G.shape().back();
      const std::size_t rows = G.size() / k;
      const double inv_k = 1.0 / static_cast<double>(k);
      Tensor dx(G.shape());
      std::vector<double> dg(k, 0.0), db(k, 0.0), dxhat(k);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = G.data() + r * k;
        const double* xh = n.aux.data() + r * k;
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          dxhat[j] = gr[j] * g[j];
          m1 += dxhat[j];
          m2 += dxhat[j] * xh[j];
          dg[j] += gr[j] * xh[j];
          db[j] += gr[j];
        }
        m1 *= inv_k;
        m2 *= inv_k;
        const double is = n.aux2[r];
        for (std::size_t j = 0; j < k; ++j) dx[r * k + j] = is * (dxhat[j] - m1 - xh[j] * m2);
      }
      accumulate(n.inputs[0], std::move(dx));
      accumulate(n.inputs[1], dg.data(), k);
      accumulate(n.inputs[2], db.data(), k);
      return;
    }

    case Op::bce: {
      const Tensor& P = nodes_[n.inputs[0].index].value;
      const double scale = G[0] / static_cast<double>(P.size());
      Tensor t(P.shape());
      for (std::size_t j = 0; j < P.size(); ++j) {
        const double p = P[j];
        if (p < kProbEps || p > 1.0 - kProbEps) continue;  // clamp has zero slope
        const double y = n.aux[j];
        t[j] = scale * n.aux2[j] * (-y / p + (1.0 - y) / (1.0 - p));
      }
      accumulate(n.inputs[0], std::move(t));
      return;
    }
  }
}

}  // namespace usd
