// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/interp.hpp"

#include <cmath>

#include "microforge/error.hpp"

namespace microforge {

float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(0.0f - x)); }

namespace {

[[noreturn]] void bad_operands(OpKind kind, const std::string& what) {
  throw ShapeError("", std::string(kind_name(kind)) + ": " + what);
}

std::size_t idx(int64_t i) { return static_cast<std::size_t>(i); }

TensorValue dense(const OpAttrs& a, const TensorValue& x, const TensorValue& w, const TensorValue& b) {
  const int64_t in = x.shape.back();
  const int64_t rows = element_count(x.shape) / in;
  Shape out_shape = x.shape;
  out_shape.back() = a.units;
  auto y = TensorValue::zeros(out_shape);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t u = 0; u < a.units; ++u) {
      float acc = b.data[idx(u)];
      for (int64_t k = 0; k < in; ++k) acc = acc + w.data[idx(u * in + k)] * x.data[idx(r * in + k)];
      y.data[idx(r * a.units + u)] = acc;
    }
  return y;
}

TensorValue conv1d(const OpAttrs& a, const TensorValue& x, const TensorValue& kernel, const TensorValue& bias) {
  const int64_t channels = x.shape[1], len = x.shape[2];
  const int64_t out_len = (len - a.kernel_len) / a.stride + 1;
  auto y = TensorValue::zeros({1, channels, out_len});
  for (int64_t c = 0; c < channels; ++c)
    for (int64_t t = 0; t < out_len; ++t) {
      float acc = bias.data[0];
      for (int64_t k = 0; k < a.kernel_len; ++k)
        acc = acc + kernel.data[idx(k)] * x.data[idx(c * len + t * a.stride + k)];
      y.data[idx(c * out_len + t)] = acc;
    }
  return y;
}

// Gate rows are ordered r, z, n in both weight matrices and bias vectors.
TensorValue gru(const OpAttrs& a, const TensorValue& x, const TensorValue& wx, const TensorValue& wh,
                const TensorValue& bx, const TensorValue& bh) {
  const int64_t in = x.shape[1], steps = x.shape[2], hidden = a.hidden;
  auto y = TensorValue::zeros({1, hidden, steps});
  std::vector<float> h(idx(hidden), 0.0f), next(idx(hidden), 0.0f);

  auto input_part = [&](int64_t row, int64_t t) {
    float acc = bx.data[idx(row)];
    for (int64_t k = 0; k < in; ++k) acc = acc + wx.data[idx(row * in + k)] * x.data[idx(k * steps + t)];
    return acc;
  };
  auto hidden_part = [&](int64_t row) {
    float acc = bh.data[idx(row)];
    for (int64_t k = 0; k < hidden; ++k) acc = acc + wh.data[idx(row * hidden + k)] * h[idx(k)];
    return acc;
  };

  for (int64_t t = 0; t < steps; ++t) {
    for (int64_t j = 0; j < hidden; ++j) {
      const float r = sigmoidf(input_part(j, t) + hidden_part(j));
      const float z = sigmoidf(input_part(hidden + j, t) + hidden_part(hidden + j));
      const float n = std::tanh(input_part(2 * hidden + j, t) + r * hidden_part(2 * hidden + j));
      next[idx(j)] = (1.0f - z) * n + z * h[idx(j)];
    }
    for (int64_t j = 0; j < hidden; ++j) {
      h[idx(j)] = next[idx(j)];
      y.data[idx(j * steps + t)] = next[idx(j)];
    }
  }
  return y;
}

TensorValue softmax(const TensorValue& x) {
  const int64_t cols = x.shape.back();
  const int64_t rows = element_count(x.shape) / cols;
  TensorValue y = TensorValue::zeros(x.shape);
  for (int64_t r = 0; r < rows; ++r) {
    const float* row = &x.data[idx(r * cols)];
    float* out = &y.data[idx(r * cols)];
    float mx = row[0];
    for (int64_t i = 0; i < cols; ++i) mx = std::fmax(mx, row[i]);
    float sum = 0.0f;
    for (int64_t i = 0; i < cols; ++i) {
      out[i] = std::exp(row[i] - mx);
      sum = sum + out[i];
    }
    for (int64_t i = 0; i < cols; ++i) out[i] = out[i] / sum;
  }
  return y;
}

template <typename F>
TensorValue map_unary(const TensorValue& x, F f) {
  TensorValue y = x;
  for (auto& v : y.data) v = f(v);
  return y;
}

template <typename F>
TensorValue map_binary(const TensorValue& a, const TensorValue& b, F f) {
  TensorValue y = a;
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] = f(a.data[i], b.data[i]);
  return y;
}

}  // namespace

TensorValue interp_op(OpKind kind, const OpAttrs& attrs, const std::vector<TensorValue>& in) {
  HirOp probe{"", kind, {}, attrs, std::nullopt, {}};
  std::vector<Shape> shapes;
  for (const auto& t : in) {
    if (static_cast<int64_t>(t.data.size()) != element_count(t.shape))
      bad_operands(kind, "operand data length does not match its shape");
    shapes.push_back(t.shape);
  }
  (void)infer_op_shape(probe, shapes);  // throws on bad operand shapes

  switch (kind) {
    case OpKind::Dense: return dense(attrs, in[0], in[1], in[2]);
    case OpKind::Conv1dDwShared: return conv1d(attrs, in[0], in[1], in[2]);
    case OpKind::Gru: return gru(attrs, in[0], in[1], in[2], in[3], in[4]);
    case OpKind::Softmax: return softmax(in[0]);
    case OpKind::Relu: return map_unary(in[0], [](float v) { return std::fmax(v, 0.0f); });
    case OpKind::Sigmoid: return map_unary(in[0], sigmoidf);
    case OpKind::Tanh: return map_unary(in[0], [](float v) { return std::tanh(v); });
    case OpKind::Add: return map_binary(in[0], in[1], [](float a, float b) { return a + b; });
    case OpKind::Sub: return map_binary(in[0], in[1], [](float a, float b) { return a - b; });
    case OpKind::Mul: return map_binary(in[0], in[1], [](float a, float b) { return a * b; });
    case OpKind::Reshape: return {attrs.new_shape, in[0].data};
    case OpKind::LastTimestep: {
      const int64_t channels = in[0].shape[1], steps = in[0].shape[2];
      auto y = TensorValue::zeros({1, channels});
      for (int64_t c = 0; c < channels; ++c) y.data[idx(c)] = in[0].data[idx(c * steps + steps - 1)];
      return y;
    }
    case OpKind::Input:
    case OpKind::Const: break;
  }
  bad_operands(kind, "leaf kinds cannot be evaluated");
}

TensorMap interp_values(const HirModule& m, const TensorMap& inputs) {
  TensorMap values;
  for (const auto& spec : m.inputs) {
    auto it = inputs.find(spec.name);
    if (it == inputs.end()) throw ShapeError(spec.name, "missing value for input '" + spec.name + "'");
    if (it->second.shape != spec.shape || static_cast<int64_t>(it->second.data.size()) != element_count(spec.shape))
      throw ShapeError(spec.name, "input '" + spec.name + "' has shape " + shape_to_string(it->second.shape) +
                                      ", module declares " + shape_to_string(spec.shape));
    values[spec.name] = it->second;
  }
  for (const auto& c : m.consts) values[c.name] = {c.shape, c.data};
  for (const auto& id : topo_schedule(m)) {
    const HirOp* op = m.find_op(id);
    std::vector<TensorValue> operands;
    operands.reserve(op->inputs.size());
    for (const auto& ref : op->inputs) operands.push_back(values.at(ref));
    try {
      values[id] = interp_op(op->kind, op->attrs, operands);
    } catch (const ShapeError& e) {
      throw ShapeError(id, "op '" + id + "': " + e.what());
    }
  }
  return values;
}

TensorMap interp(const HirModule& m, const TensorMap& inputs) {
  TensorMap values = interp_values(m, inputs);
  TensorMap out;
  for (const auto& name : m.outputs) out[name] = values.at(name);
  return out;
}

std::set<OpKind> supported_kinds() {
  return {compute_kinds().begin(), compute_kinds().end()};
}

}  // namespace microforge
