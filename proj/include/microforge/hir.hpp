// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "microforge/model_format.hpp"

namespace microforge {

using ValueRef = std::string;

/// High-level op taxonomy. Input and Const name the leaf values of a module;
/// every other kind is a compute op.
enum class OpKind {
  Input,
  Const,
  Dense,
  Conv1dDwShared,
  Gru,
  Softmax,
  Relu,
  Sigmoid,
  Tanh,
  Add,
  Sub,
  Mul,
  Reshape,
  LastTimestep,
};

std::string_view kind_name(OpKind kind);
/// Short lower-case name used in C symbols ("dense", "conv1d", ...).
std::string_view kind_symbol(OpKind kind);
const std::vector<OpKind>& compute_kinds();

bool is_unary(OpKind kind);
bool is_elementwise_binary(OpKind kind);
/// Operand count of a compute kind (data operands plus constants).
std::size_t operand_count(OpKind kind);

struct OpAttrs {
  int64_t kernel_len = 0;  // Conv1dDwShared
  int64_t stride = 0;      // Conv1dDwShared
  int64_t hidden = 0;      // Gru
  int64_t units = 0;       // Dense
  Shape new_shape;         // Reshape

  friend bool operator==(const OpAttrs&, const OpAttrs&) = default;
};

/// Placement of an op. An empty accelerator name means the CPU.
struct Target {
  std::string accel;
  std::string pattern;
  int region = -1;

  bool is_cpu() const { return accel.empty(); }
  static Target cpu() { return {}; }

  friend bool operator==(const Target&, const Target&) = default;
};

struct HirOp {
  std::string id;
  OpKind kind = OpKind::Relu;
  std::vector<ValueRef> inputs;
  OpAttrs attrs;
  std::optional<Shape> out_shape;  // filled by shape inference
  Target target;

  friend bool operator==(const HirOp&, const HirOp&) = default;
};

struct ConstTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;

  friend bool operator==(const ConstTensor&, const ConstTensor&) = default;
};

/// Dataflow module. `ops` holds compute ops only; graph inputs and constants
/// are leaf values referenced by name. Values share one namespace.
struct HirModule {
  std::string name;
  std::vector<TensorSpec> inputs;
  std::vector<ConstTensor> consts;
  std::vector<HirOp> ops;
  std::vector<ValueRef> outputs;

  friend bool operator==(const HirModule&, const HirModule&) = default;

  const HirOp* find_op(std::string_view id) const;
  HirOp* find_op(std::string_view id);
  const ConstTensor* find_const(std::string_view name) const;
  const TensorSpec* find_input(std::string_view name) const;

  /// Kind of the value's producer, or nullopt for unknown names.
  std::optional<OpKind> producer_kind(std::string_view value) const;
  /// Shape of a value if known (inputs, consts, shape-inferred ops).
  std::optional<Shape> shape_of(std::string_view value) const;
  bool is_output(std::string_view value) const;
  /// Compute ops consuming `value`, in module order, once per op.
  std::vector<const HirOp*> consumers(std::string_view value) const;
};

struct Diagnostic {
  std::string op;
  std::string message;
};

/// Structural checks: arity, reference resolution, acyclicity, single
/// producer per value, const-data sizes. Returns every problem found.
std::vector<Diagnostic> validate(const HirModule& m);

/// Output shape of one op given its operand shapes. Throws ShapeError.
Shape infer_op_shape(const HirOp& op, const std::vector<Shape>& operand_shapes);

/// Annotates every op with its output shape. Throws ShapeError naming the op.
HirModule infer_shapes(const HirModule& m);

/// Op ids in dependency order; ties broken by lexicographic op id.
std::vector<std::string> topo_schedule(const HirModule& m);

/// One op per line: `id: Kind(attrs) (inputs) -> shape @target`.
std::string dump(const HirModule& m);

/// Appends ops to a module while keeping it shape-inferred.
class HirBuilder {
 public:
  explicit HirBuilder(std::string name);

  ValueRef input(std::string name, Shape shape);
  ValueRef constant(std::string name, Shape shape, std::vector<float> data);
  ValueRef op(std::string id, OpKind kind, std::vector<ValueRef> inputs, OpAttrs attrs = {});
  void output(ValueRef value);

  bool has_value(std::string_view name) const;
  Shape shape_of(std::string_view value) const;
  const HirModule& module() const { return module_; }
  HirModule finish() &&;

 private:
  HirModule module_;
};

}  // namespace microforge
