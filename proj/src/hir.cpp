// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/hir.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "microforge/error.hpp"

namespace microforge {

std::string_view kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return "Input";
    case OpKind::Const: return "Const";
    case OpKind::Dense: return "Dense";
    case OpKind::Conv1dDwShared: return "Conv1dDwShared";
    case OpKind::Gru: return "Gru";
    case OpKind::Softmax: return "Softmax";
    case OpKind::Relu: return "Relu";
    case OpKind::Sigmoid: return "Sigmoid";
    case OpKind::Tanh: return "Tanh";
    case OpKind::Add: return "Add";
    case OpKind::Sub: return "Sub";
    case OpKind::Mul: return "Mul";
    case OpKind::Reshape: return "Reshape";
    case OpKind::LastTimestep: return "LastTimestep";
  }
  return "?";
}

std::string_view kind_symbol(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return "input";
    case OpKind::Const: return "const";
    case OpKind::Dense: return "dense";
    case OpKind::Conv1dDwShared: return "conv1d";
    case OpKind::Gru: return "gru";
    case OpKind::Softmax: return "softmax";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Reshape: return "reshape";
    case OpKind::LastTimestep: return "last_timestep";
  }
  return "?";
}

const std::vector<OpKind>& compute_kinds() {
  static const std::vector<OpKind> kinds = {
      OpKind::Dense, OpKind::Conv1dDwShared, OpKind::Gru, OpKind::Softmax, OpKind::Relu,
      OpKind::Sigmoid, OpKind::Tanh, OpKind::Add, OpKind::Sub, OpKind::Mul,
      OpKind::Reshape, OpKind::LastTimestep};
  return kinds;
}

bool is_unary(OpKind k) {
  return k == OpKind::Relu || k == OpKind::Sigmoid || k == OpKind::Tanh;
}

bool is_elementwise_binary(OpKind k) {
  return k == OpKind::Add || k == OpKind::Sub || k == OpKind::Mul;
}

namespace {

/// Number of operands and the positions that must be constants.
struct Arity {
  std::size_t operands;
  std::size_t first_const;  // operands at or after this index are constants
};

Arity arity_of(OpKind k) {
  switch (k) {
    case OpKind::Dense:
    case OpKind::Conv1dDwShared: return {3, 1};
    case OpKind::Gru: return {5, 1};
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul: return {2, 2};
    default: return {1, 1};
  }
}

}  // namespace

std::size_t operand_count(OpKind kind) { return arity_of(kind).operands; }

// ---------------------------------------------------------------------------
// HirModule lookups

const HirOp* HirModule::find_op(std::string_view id) const {
  for (const auto& op : ops)
    if (op.id == id) return &op;
  return nullptr;
}

HirOp* HirModule::find_op(std::string_view id) {
  for (auto& op : ops)
    if (op.id == id) return &op;
  return nullptr;
}

const ConstTensor* HirModule::find_const(std::string_view name) const {
  for (const auto& c : consts)
    if (c.name == name) return &c;
  return nullptr;
}

const TensorSpec* HirModule::find_input(std::string_view name) const {
  for (const auto& in : inputs)
    if (in.name == name) return &in;
  return nullptr;
}

std::optional<OpKind> HirModule::producer_kind(std::string_view value) const {
  if (find_input(value)) return OpKind::Input;
  if (find_const(value)) return OpKind::Const;
  if (const auto* op = find_op(value)) return op->kind;
  return std::nullopt;
}

std::optional<Shape> HirModule::shape_of(std::string_view value) const {
  if (const auto* in = find_input(value)) return in->shape;
  if (const auto* c = find_const(value)) return c->shape;
  if (const auto* op = find_op(value)) return op->out_shape;
  return std::nullopt;
}

bool HirModule::is_output(std::string_view value) const {
  return std::find(outputs.begin(), outputs.end(), value) != outputs.end();
}

std::vector<const HirOp*> HirModule::consumers(std::string_view value) const {
  std::vector<const HirOp*> out;
  for (const auto& op : ops)
    if (std::find(op.inputs.begin(), op.inputs.end(), value) != op.inputs.end()) out.push_back(&op);
  return out;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Diagnostic> validate(const HirModule& m) {
  std::vector<Diagnostic> errs;
  std::map<std::string, std::string> producers;  // value -> description
  auto define = [&](const std::string& name, const std::string& what) {
    if (name.empty()) {
      errs.push_back({name, what + " has an empty name"});
      return;
    }
    auto [it, inserted] = producers.emplace(name, what);
    if (!inserted) errs.push_back({name, "value '" + name + "' has more than one producer"});
  };

  for (const auto& in : m.inputs) {
    define(in.name, "input");
    if (in.shape.empty() || std::any_of(in.shape.begin(), in.shape.end(), [](int64_t e) { return e < 1; }))
      errs.push_back({in.name, "input '" + in.name + "' has invalid shape " + shape_to_string(in.shape)});
  }
  for (const auto& c : m.consts) {
    define(c.name, "const");
    if (c.shape.empty() || std::any_of(c.shape.begin(), c.shape.end(), [](int64_t e) { return e < 1; }))
      errs.push_back({c.name, "const '" + c.name + "' has invalid shape " + shape_to_string(c.shape)});
    else if (static_cast<int64_t>(c.data.size()) != element_count(c.shape))
      errs.push_back({c.name, "const '" + c.name + "' holds " + std::to_string(c.data.size()) +
                                  " values, shape " + shape_to_string(c.shape) + " needs " +
                                  std::to_string(element_count(c.shape))});
  }
  for (const auto& op : m.ops) {
    if (op.kind == OpKind::Input || op.kind == OpKind::Const) {
      errs.push_back({op.id, "op '" + op.id + "' uses leaf kind " + std::string(kind_name(op.kind))});
      continue;
    }
    define(op.id, "op");
  }

  for (const auto& op : m.ops) {
    if (op.kind == OpKind::Input || op.kind == OpKind::Const) continue;
    const Arity ar = arity_of(op.kind);
    if (op.inputs.size() != ar.operands) {
      errs.push_back({op.id, std::string(kind_name(op.kind)) + " '" + op.id + "' expects " +
                                 std::to_string(ar.operands) + " operands, got " +
                                 std::to_string(op.inputs.size())});
    }
    for (std::size_t i = 0; i < op.inputs.size(); ++i) {
      const auto& ref = op.inputs[i];
      if (!producers.count(ref)) {
        errs.push_back({op.id, "op '" + op.id + "' references unknown value '" + ref + "'"});
        continue;
      }
      if (i >= ar.first_const && i < ar.operands && !m.find_const(ref))
        errs.push_back({op.id, "operand " + std::to_string(i) + " of '" + op.id + "' must be a constant"});
    }
    switch (op.kind) {
      case OpKind::Dense:
        if (op.attrs.units < 1) errs.push_back({op.id, "Dense '" + op.id + "' needs units >= 1"});
        break;
      case OpKind::Conv1dDwShared:
        if (op.attrs.kernel_len < 1 || op.attrs.stride < 1)
          errs.push_back({op.id, "Conv1dDwShared '" + op.id + "' needs kernel_len >= 1 and stride >= 1"});
        break;
      case OpKind::Gru:
        if (op.attrs.hidden < 1) errs.push_back({op.id, "Gru '" + op.id + "' needs hidden >= 1"});
        break;
      case OpKind::Reshape:
        if (op.attrs.new_shape.empty() ||
            std::any_of(op.attrs.new_shape.begin(), op.attrs.new_shape.end(), [](int64_t e) { return e < 1; }))
          errs.push_back({op.id, "Reshape '" + op.id + "' has invalid new_shape " +
                                     shape_to_string(op.attrs.new_shape)});
        break;
      default: break;
    }
  }

  for (const auto& out : m.outputs)
    if (!producers.count(out)) errs.push_back({out, "output '" + out + "' does not resolve"});

  // Acyclicity over op-to-op edges.
  std::map<std::string, int> pending;
  std::map<std::string, std::vector<std::string>> users;
  for (const auto& op : m.ops) {
    std::set<std::string> deps;
    for (const auto& ref : op.inputs)
      if (m.find_op(ref) && ref != op.id) deps.insert(ref);
      else if (ref == op.id) errs.push_back({op.id, "op '" + op.id + "' consumes its own output"});
    pending[op.id] = static_cast<int>(deps.size());
    for (const auto& d : deps) users[d].push_back(op.id);
  }
  std::vector<std::string> ready;
  for (const auto& [id, n] : pending)
    if (n == 0) ready.push_back(id);
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto id = ready.back();
    ready.pop_back();
    ++visited;
    for (const auto& u : users[id])
      if (--pending[u] == 0) ready.push_back(u);
  }
  if (visited != pending.size()) {
    for (const auto& [id, n] : pending)
      if (n > 0) {
        errs.push_back({id, "op '" + id + "' is part of a cycle"});
        break;
      }
  }
  return errs;
}

// ---------------------------------------------------------------------------
// Shape inference

namespace {

[[noreturn]] void shape_fail(const HirOp& op, const std::string& what) {
  throw ShapeError(op.id, std::string(kind_name(op.kind)) + " '" + op.id + "': " + what);
}

void expect_shape(const HirOp& op, const Shape& got, const Shape& want, const char* role) {
  if (got != want)
    shape_fail(op, std::string(role) + " shape mismatch: " + shape_to_string(got) + " vs expected " +
                       shape_to_string(want));
}

}  // namespace

Shape infer_op_shape(const HirOp& op, const std::vector<Shape>& s) {
  const Arity ar = arity_of(op.kind);
  if (s.size() != ar.operands)
    shape_fail(op, "expects " + std::to_string(ar.operands) + " operands, got " + std::to_string(s.size()));

  switch (op.kind) {
    case OpKind::Dense: {
      const Shape& x = s[0];
      if (x.empty()) shape_fail(op, "data operand has rank 0");
      const int64_t in = x.back();
      expect_shape(op, s[1], {op.attrs.units, in}, "weight");
      expect_shape(op, s[2], {op.attrs.units}, "bias");
      Shape out = x;
      out.back() = op.attrs.units;
      return out;
    }
    case OpKind::Conv1dDwShared: {
      const Shape& x = s[0];
      if (x.size() != 3 || x[0] != 1)
        shape_fail(op, "data operand must be [1, C, L], got " + shape_to_string(x));
      expect_shape(op, s[1], {op.attrs.kernel_len}, "kernel");
      expect_shape(op, s[2], {1}, "bias");
      if (x[2] < op.attrs.kernel_len)
        shape_fail(op, "non-positive output length: input length " + std::to_string(x[2]) +
                           " is shorter than kernel " + std::to_string(op.attrs.kernel_len));
      return {1, x[1], (x[2] - op.attrs.kernel_len) / op.attrs.stride + 1};
    }
    case OpKind::Gru: {
      const Shape& x = s[0];
      if (x.size() != 3 || x[0] != 1)
        shape_fail(op, "data operand must be [1, C, T], got " + shape_to_string(x));
      const int64_t h = op.attrs.hidden;
      expect_shape(op, s[1], {3 * h, x[1]}, "input weight");
      expect_shape(op, s[2], {3 * h, h}, "recurrent weight");
      expect_shape(op, s[3], {3 * h}, "input bias");
      expect_shape(op, s[4], {3 * h}, "recurrent bias");
      return {1, h, x[2]};
    }
    case OpKind::LastTimestep: {
      const Shape& x = s[0];
      if (x.size() != 3 || x[0] != 1)
        shape_fail(op, "data operand must be [1, H, T], got " + shape_to_string(x));
      return {1, x[1]};
    }
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
      if (s[0] != s[1])
        shape_fail(op, "shape mismatch: " + shape_to_string(s[0]) + " vs " + shape_to_string(s[1]));
      return s[0];
    case OpKind::Reshape:
      if (element_count(op.attrs.new_shape) != element_count(s[0]))
        shape_fail(op, "cannot reshape " + shape_to_string(s[0]) + " to " +
                           shape_to_string(op.attrs.new_shape));
      return op.attrs.new_shape;
    case OpKind::Softmax:
    case OpKind::Relu:
    case OpKind::Sigmoid:
    case OpKind::Tanh:
      if (s[0].empty()) shape_fail(op, "operand has rank 0");
      return s[0];
    case OpKind::Input:
    case OpKind::Const: break;
  }
  shape_fail(op, "leaf kinds have no inferred shape");
}

HirModule infer_shapes(const HirModule& m) {
  if (auto errs = validate(m); !errs.empty())
    throw ShapeError(errs.front().op, "invalid module: " + errs.front().message);
  HirModule out = m;
  for (const auto& id : topo_schedule(out)) {
    HirOp* op = out.find_op(id);
    std::vector<Shape> operand_shapes;
    for (const auto& ref : op->inputs) {
      auto shape = out.shape_of(ref);
      if (!shape) throw ShapeError(op->id, "operand '" + ref + "' of '" + op->id + "' has no shape");
      operand_shapes.push_back(*shape);
    }
    op->out_shape = infer_op_shape(*op, operand_shapes);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scheduling

std::vector<std::string> topo_schedule(const HirModule& m) {
  std::map<std::string, int> pending;
  std::map<std::string, std::vector<std::string>> users;
  for (const auto& op : m.ops) {
    std::set<std::string> deps;
    for (const auto& ref : op.inputs)
      if (m.find_op(ref)) deps.insert(ref);
    pending[op.id] = static_cast<int>(deps.size());
    for (const auto& d : deps) users[d].push_back(op.id);
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, n] : pending)
    if (n == 0) ready.push(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto& u : users[id])
      if (--pending[u] == 0) ready.push(u);
  }
  if (order.size() != m.ops.size()) {
    for (const auto& [id, n] : pending)
      if (n > 0) throw ShapeError(id, "cycle detected at op '" + id + "'");
  }
  return order;
}

// ---------------------------------------------------------------------------
// Text dump

namespace {

std::string attrs_text(const HirOp& op) {
  switch (op.kind) {
    case OpKind::Dense: return "units=" + std::to_string(op.attrs.units);
    case OpKind::Conv1dDwShared:
      return "kernel_len=" + std::to_string(op.attrs.kernel_len) + ", stride=" + std::to_string(op.attrs.stride);
    case OpKind::Gru: return "hidden=" + std::to_string(op.attrs.hidden);
    case OpKind::Reshape: return "new_shape=" + shape_to_string(op.attrs.new_shape);
    default: return "";
  }
}

std::string target_text(const Target& t) {
  if (t.is_cpu()) return "cpu";
  std::string s = t.accel;
  if (!t.pattern.empty()) s += ":" + t.pattern;
  if (t.region >= 0) s += "#" + std::to_string(t.region);
  return s;
}

}  // namespace

std::string dump(const HirModule& m) {
  std::ostringstream os;
  os << "module " << m.name << "\n";
  for (const auto& in : m.inputs) os << in.name << ": Input -> " << shape_to_string(in.shape) << "\n";
  for (const auto& c : m.consts) os << c.name << ": Const -> " << shape_to_string(c.shape) << "\n";
  for (const auto& op : m.ops) {
    os << op.id << ": " << kind_name(op.kind) << "(" << attrs_text(op) << ") (";
    for (std::size_t i = 0; i < op.inputs.size(); ++i) os << (i ? ", " : "") << op.inputs[i];
    os << ") -> " << (op.out_shape ? shape_to_string(*op.out_shape) : std::string("?")) << " @"
       << target_text(op.target) << "\n";
  }
  os << "outputs:";
  for (const auto& o : m.outputs) os << " " << o;
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Builder

HirBuilder::HirBuilder(std::string name) { module_.name = std::move(name); }

bool HirBuilder::has_value(std::string_view name) const {
  return module_.producer_kind(name).has_value();
}

Shape HirBuilder::shape_of(std::string_view value) const {
  auto s = module_.shape_of(value);
  if (!s) throw ShapeError(std::string(value), "unknown value '" + std::string(value) + "'");
  return *s;
}

ValueRef HirBuilder::input(std::string name, Shape shape) {
  if (has_value(name)) throw ShapeError(name, "value '" + name + "' already defined");
  module_.inputs.push_back({name, DType::F32, std::move(shape)});
  return name;
}

ValueRef HirBuilder::constant(std::string name, Shape shape, std::vector<float> data) {
  if (has_value(name)) throw ShapeError(name, "value '" + name + "' already defined");
  if (static_cast<int64_t>(data.size()) != element_count(shape))
    throw ShapeError(name, "const '" + name + "' data size does not match " + shape_to_string(shape));
  module_.consts.push_back({name, std::move(shape), std::move(data)});
  return name;
}

ValueRef HirBuilder::op(std::string id, OpKind kind, std::vector<ValueRef> inputs, OpAttrs attrs) {
  if (has_value(id)) throw ShapeError(id, "value '" + id + "' already defined");
  HirOp op{id, kind, std::move(inputs), std::move(attrs), std::nullopt, Target::cpu()};
  std::vector<Shape> shapes;
  for (const auto& ref : op.inputs) shapes.push_back(shape_of(ref));
  op.out_shape = infer_op_shape(op, shapes);
  module_.ops.push_back(std::move(op));
  return id;
}

void HirBuilder::output(ValueRef value) {
  if (!has_value(value)) throw ShapeError(value, "unknown output '" + value + "'");
  module_.outputs.push_back(std::move(value));
}

HirModule HirBuilder::finish() && { return std::move(module_); }

}  // namespace microforge
