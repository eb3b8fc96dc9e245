// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mftest {

using namespace microforge;

float uniform(Rng& rng, float lo, float hi) { return std::uniform_real_distribution<float>(lo, hi)(rng); }

int64_t pick(Rng& rng, int64_t lo, int64_t hi) { return std::uniform_int_distribution<int64_t>(lo, hi)(rng); }

std::vector<float> random_data(Rng& rng, int64_t n, float lo, float hi) {
  std::vector<float> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = uniform(rng, lo, hi);
  return v;
}

namespace {

TensorValue random_tensor(Rng& rng, Shape shape, float lo = -1.0f, float hi = 1.0f) {
  const int64_t n = element_count(shape);
  return TensorValue(std::move(shape), random_data(rng, n, lo, hi));
}

Shape random_shape(Rng& rng) {
  const int64_t rank = pick(rng, 1, 3);
  Shape s;
  for (int64_t i = 0; i < rank; ++i) s.push_back(pick(rng, 1, 5));
  return s;
}

}  // namespace

OpInstance random_instance(OpKind kind, Rng& rng) {
  OpInstance inst;
  switch (kind) {
    case OpKind::Dense: {
      Shape x = random_shape(rng);
      const int64_t in = x.back();
      inst.attrs.units = pick(rng, 1, 8);
      inst.operands = {random_tensor(rng, x), random_tensor(rng, {inst.attrs.units, in}),
                       random_tensor(rng, {inst.attrs.units})};
      break;
    }
    case OpKind::Conv1dDwShared: {
      const int64_t c = pick(rng, 1, 6), k = pick(rng, 1, 7);
      const int64_t l = pick(rng, k, 40);
      inst.attrs.kernel_len = k;
      inst.attrs.stride = pick(rng, 1, 3);
      inst.operands = {random_tensor(rng, {1, c, l}), random_tensor(rng, {k}), random_tensor(rng, {1})};
      break;
    }
    case OpKind::Gru: {
      const int64_t c = pick(rng, 1, 6), t = pick(rng, 1, 20), h = pick(rng, 1, 8);
      inst.attrs.hidden = h;
      inst.operands = {random_tensor(rng, {1, c, t}), random_tensor(rng, {3 * h, c}, -0.5f, 0.5f),
                       random_tensor(rng, {3 * h, h}, -0.5f, 0.5f), random_tensor(rng, {3 * h}, -0.5f, 0.5f),
                       random_tensor(rng, {3 * h}, -0.5f, 0.5f)};
      break;
    }
    case OpKind::LastTimestep:
      inst.operands = {random_tensor(rng, {1, pick(rng, 1, 6), pick(rng, 1, 10)})};
      break;
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul: {
      Shape s = random_shape(rng);
      inst.operands = {random_tensor(rng, s), random_tensor(rng, s)};
      break;
    }
    case OpKind::Reshape: {
      Shape s = random_shape(rng);
      inst.attrs.new_shape = {element_count(s)};
      if (pick(rng, 0, 1)) inst.attrs.new_shape = {1, element_count(s)};
      inst.operands = {random_tensor(rng, s)};
      break;
    }
    case OpKind::Softmax:
      inst.operands = {random_tensor(rng, random_shape(rng), -4.0f, 4.0f)};
      break;
    case OpKind::Relu:
    case OpKind::Sigmoid:
    case OpKind::Tanh:
      inst.operands = {random_tensor(rng, random_shape(rng), -4.0f, 4.0f)};
      break;
    case OpKind::Input:
    case OpKind::Const: throw std::invalid_argument("leaf kinds have no instances");
  }
  return inst;
}

HirModule random_module(Rng& rng, int max_ops) {
  HirBuilder b("rand");
  std::vector<ValueRef> pool;
  pool.push_back(b.input("in0", {1, pick(rng, 1, 4), pick(rng, 6, 24)}));
  if (pick(rng, 0, 1)) pool.push_back(b.input("in1", {pick(rng, 1, 3), pick(rng, 1, 6)}));

  const int n_ops = static_cast<int>(pick(rng, 2, std::max(2, max_ops)));
  int consts = 0;
  auto constant = [&](Shape s, float lo = -1.0f, float hi = 1.0f) {
    const int64_t n = element_count(s);
    return b.constant("k" + std::to_string(consts++), std::move(s), random_data(rng, n, lo, hi));
  };

  for (int i = 0; i < n_ops; ++i) {
    const std::string id = "op" + std::to_string(i);
    const ValueRef v = pool[static_cast<std::size_t>(pick(rng, 0, static_cast<int64_t>(pool.size()) - 1))];
    const Shape s = b.shape_of(v);
    const bool seq = s.size() == 3 && s[0] == 1;

    std::vector<OpKind> choices = {OpKind::Dense, OpKind::Relu,    OpKind::Sigmoid, OpKind::Tanh, OpKind::Softmax,
                                   OpKind::Add,   OpKind::Sub,     OpKind::Mul,     OpKind::Reshape};
    if (seq) {
      choices.push_back(OpKind::Gru);
      choices.push_back(OpKind::LastTimestep);
      if (s[2] >= 1) choices.push_back(OpKind::Conv1dDwShared);
    }
    const OpKind kind = choices[static_cast<std::size_t>(pick(rng, 0, static_cast<int64_t>(choices.size()) - 1))];

    OpAttrs a;
    ValueRef out;
    switch (kind) {
      case OpKind::Dense:
        a.units = pick(rng, 1, 6);
        out = b.op(id, kind, {v, constant({a.units, s.back()}), constant({a.units})}, a);
        break;
      case OpKind::Conv1dDwShared:
        a.kernel_len = pick(rng, 1, std::min<int64_t>(5, s[2]));
        a.stride = pick(rng, 1, 2);
        out = b.op(id, kind, {v, constant({a.kernel_len}), constant({1})}, a);
        break;
      case OpKind::Gru:
        a.hidden = pick(rng, 1, 4);
        out = b.op(id, kind,
                   {v, constant({3 * a.hidden, s[1]}, -0.5f, 0.5f), constant({3 * a.hidden, a.hidden}, -0.5f, 0.5f),
                    constant({3 * a.hidden}, -0.5f, 0.5f), constant({3 * a.hidden}, -0.5f, 0.5f)},
                   a);
        break;
      case OpKind::Add:
      case OpKind::Sub:
      case OpKind::Mul: {
        std::vector<ValueRef> same;
        for (const auto& p : pool)
          if (b.shape_of(p) == s) same.push_back(p);
        const ValueRef w = pick(rng, 0, 2) == 0 ? constant(s) : same[static_cast<std::size_t>(
                                                                     pick(rng, 0, static_cast<int64_t>(same.size()) - 1))];
        out = b.op(id, kind, {v, w}, a);
        break;
      }
      case OpKind::Reshape:
        a.new_shape = pick(rng, 0, 1) ? Shape{element_count(s)} : Shape{1, element_count(s)};
        out = b.op(id, kind, {v}, a);
        break;
      default:
        out = b.op(id, kind, {v}, a);
        break;
    }
    pool.push_back(out);
  }

  HirModule m = b.module();
  std::map<std::string, int> uses;
  for (const auto& op : m.ops)
    for (const auto& in : op.inputs) ++uses[in];
  for (const auto& op : m.ops)
    if (!uses.count(op.id) || pick(rng, 0, 7) == 0) b.output(op.id);
  return std::move(b).finish();
}

TensorMap random_inputs(const HirModule& m, Rng& rng) {
  TensorMap inputs;
  for (const auto& in : m.inputs) inputs[in.name] = random_tensor(rng, in.shape);
  return inputs;
}

AccelRegistry random_registry(Rng& rng) {
  static const std::vector<OpKind> kinds = {OpKind::Dense,  OpKind::Conv1dDwShared, OpKind::Gru,
                                            OpKind::Relu,   OpKind::Sigmoid,        OpKind::Tanh,
                                            OpKind::Softmax, OpKind::Add,           OpKind::Mul,
                                            OpKind::Reshape, OpKind::LastTimestep};
  AccelRegistry registry;
  const int64_t n_accel = pick(rng, 1, 3);
  for (int64_t a = 0; a < n_accel; ++a) {
    AcceleratorDesc desc;
    desc.name = "acc" + std::to_string(a);
    const int64_t n_patterns = pick(rng, 0, 4);
    for (int64_t p = 0; p < n_patterns; ++p) {
      Pattern pat;
      pat.name = "p" + std::to_string(p);
      pat.priority = static_cast<int>(pick(rng, 0, 3));
      const int64_t len = pick(rng, 1, 3);
      for (int64_t i = 0; i < len; ++i) pat.chain.push_back(kinds[static_cast<std::size_t>(pick(rng, 0, 10))]);
      desc.patterns.push_back(std::move(pat));
    }
    desc.graph_passes.push_back({"identity", [](const HirModule& m, const MatchedRegion&) { return m; }});
    registry = register_accelerator(registry, std::move(desc));
  }
  return registry;
}

// ---------------------------------------------------------------------------

namespace brute {

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> widen(const TensorValue& t) { return std::vector<double>(t.data.begin(), t.data.end()); }

}  // namespace

std::vector<double> run(OpKind kind, const OpAttrs& attrs, const std::vector<TensorValue>& ops) {
  switch (kind) {
    case OpKind::Dense: {
      const auto& x = ops[0];
      const int64_t in = x.shape.back(), units = attrs.units, rows = element_count(x.shape) / in;
      std::vector<double> y;
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t u = 0; u < units; ++u) {
          double s = ops[2].data[static_cast<std::size_t>(u)];
          for (int64_t k = 0; k < in; ++k)
            s += static_cast<double>(ops[1].data[static_cast<std::size_t>(u * in + k)]) *
                 ops[0].data[static_cast<std::size_t>(r * in + k)];
          y.push_back(s);
        }
      return y;
    }
    case OpKind::Conv1dDwShared: {
      const int64_t c = ops[0].shape[1], l = ops[0].shape[2], k = attrs.kernel_len, st = attrs.stride;
      std::vector<double> y;
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t start = 0; start + k <= l; start += st) {
          double s = ops[2].data[0];
          for (int64_t j = 0; j < k; ++j)
            s += static_cast<double>(ops[1].data[static_cast<std::size_t>(j)]) *
                 ops[0].data[static_cast<std::size_t>(ch * l + start + j)];
          y.push_back(s);
        }
      return y;
    }
    case OpKind::Gru: {
      const int64_t c = ops[0].shape[1], t_len = ops[0].shape[2], h = attrs.hidden;
      const auto &x = ops[0].data, &wx = ops[1].data, &wh = ops[2].data, &bx = ops[3].data, &bh = ops[4].data;
      std::vector<double> state(static_cast<std::size_t>(h), 0.0);
      std::vector<double> y(static_cast<std::size_t>(h * t_len));
      auto at = [](const std::vector<float>& v, int64_t i) { return static_cast<double>(v[static_cast<std::size_t>(i)]); };
      for (int64_t t = 0; t < t_len; ++t) {
        std::vector<double> next(static_cast<std::size_t>(h));
        for (int64_t j = 0; j < h; ++j) {
          double gx[3], gh[3];
          for (int g = 0; g < 3; ++g) {
            const int64_t row = g * h + j;
            gx[g] = at(bx, row);
            gh[g] = at(bh, row);
            for (int64_t i = 0; i < c; ++i) gx[g] += at(wx, row * c + i) * at(x, i * t_len + t);
            for (int64_t i = 0; i < h; ++i) gh[g] += at(wh, row * h + i) * state[static_cast<std::size_t>(i)];
          }
          const double r = sig(gx[0] + gh[0]);
          const double z = sig(gx[1] + gh[1]);
          const double n = std::tanh(gx[2] + r * gh[2]);
          next[static_cast<std::size_t>(j)] = (1.0 - z) * n + z * state[static_cast<std::size_t>(j)];
        }
        state = next;
        for (int64_t j = 0; j < h; ++j) y[static_cast<std::size_t>(j * t_len + t)] = state[static_cast<std::size_t>(j)];
      }
      return y;
    }
    case OpKind::LastTimestep: {
      const int64_t c = ops[0].shape[1], t = ops[0].shape[2];
      std::vector<double> y;
      for (int64_t ch = 0; ch < c; ++ch) y.push_back(ops[0].data[static_cast<std::size_t>(ch * t + t - 1)]);
      return y;
    }
    case OpKind::Softmax: {
      const auto x = widen(ops[0]);
      const auto cols = static_cast<std::size_t>(ops[0].shape.back());
      std::vector<double> y(x.size());
      for (std::size_t r = 0; r < x.size() / cols; ++r) {
        double total = 0.0;
        for (std::size_t k = 0; k < cols; ++k) total += std::exp(x[r * cols + k]);
        for (std::size_t k = 0; k < cols; ++k) y[r * cols + k] = std::exp(x[r * cols + k]) / total;
      }
      return y;
    }
    case OpKind::Relu:
    case OpKind::Sigmoid:
    case OpKind::Tanh:
    case OpKind::Reshape: {
      auto y = widen(ops[0]);
      for (auto& v : y) v = kind == OpKind::Relu ? (v > 0 ? v : 0.0) : kind == OpKind::Sigmoid ? sig(v)
                                                                      : kind == OpKind::Tanh  ? std::tanh(v)
                                                                                              : v;
      return y;
    }
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul: {
      auto y = widen(ops[0]);
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double b = ops[1].data[i];
        y[i] = kind == OpKind::Add ? y[i] + b : kind == OpKind::Sub ? y[i] - b : y[i] * b;
      }
      return y;
    }
    case OpKind::Input:
    case OpKind::Const: break;
  }
  throw std::invalid_argument("no brute-force semantics for leaf kinds");
}

}  // namespace brute

std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("mftest_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::pair<std::string, std::string>> read_tree(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files.emplace_back(std::filesystem::relative(e.path(), dir).generic_string(), ss.str());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace mftest
