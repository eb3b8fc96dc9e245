// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/frontend.hpp"

#include <map>

namespace microforge {

// ---------------------------------------------------------------------------
// ConvertContext

void ConvertContext::fail(const std::string& what) const {
  throw ConvertError("node '" + node_.id + "' (" + node_.op_name + "): " + what);
}

const ValueRef& ConvertContext::param(std::size_t i) const {
  if (i >= params_.size()) fail("missing parameter #" + std::to_string(i));
  return params_[i];
}

void ConvertContext::expect_operands(std::span<const ValueRef> inputs, std::size_t data,
                                     std::size_t params) const {
  if (inputs.size() != data)
    fail("expects " + std::to_string(data) + " data input(s), got " + std::to_string(inputs.size()));
  if (params_.size() != params)
    fail("expects " + std::to_string(params) + " parameter(s), got " + std::to_string(params_.size()));
}

int64_t ConvertContext::attr_int(std::string_view key) const {
  auto it = node_.attrs.find(std::string(key));
  if (it == node_.attrs.end()) fail("missing attribute '" + std::string(key) + "'");
  if (const auto* v = std::get_if<int64_t>(&it->second)) return *v;
  fail("attribute '" + std::string(key) + "' must be an integer");
}

double ConvertContext::attr_float(std::string_view key) const {
  auto it = node_.attrs.find(std::string(key));
  if (it == node_.attrs.end()) fail("missing attribute '" + std::string(key) + "'");
  if (const auto* v = std::get_if<double>(&it->second)) return *v;
  if (const auto* v = std::get_if<int64_t>(&it->second)) return static_cast<double>(*v);
  fail("attribute '" + std::string(key) + "' must be a number");
}

Shape ConvertContext::attr_ints(std::string_view key) const {
  auto it = node_.attrs.find(std::string(key));
  if (it == node_.attrs.end()) fail("missing attribute '" + std::string(key) + "'");
  if (const auto* v = std::get_if<std::vector<int64_t>>(&it->second)) return *v;
  fail("attribute '" + std::string(key) + "' must be an integer list");
}

std::string ConvertContext::name_for(std::string_view suffix) const {
  std::string name = suffix.empty() ? node_.id : node_.id + "/" + std::string(suffix);
  if (builder_.has_value(name)) fail("value name '" + name + "' is already taken");
  return name;
}

ValueRef ConvertContext::emit(OpKind kind, std::vector<ValueRef> inputs, OpAttrs attrs, std::string_view suffix) {
  return builder_.op(name_for(suffix), kind, std::move(inputs), std::move(attrs));
}

ValueRef ConvertContext::constant(Shape shape, std::vector<float> data, std::string_view suffix) {
  if (suffix.empty()) fail("constants need a name suffix");
  return builder_.constant(name_for(suffix), std::move(shape), std::move(data));
}

ValueRef ConvertContext::filled(const Shape& shape, float value, std::string_view suffix) {
  return constant(shape, std::vector<float>(static_cast<std::size_t>(element_count(shape)), value), suffix);
}

// ---------------------------------------------------------------------------
// ConvertMap

const ConverterFn* ConvertMap::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> ConvertMap::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

ConvertMap ConvertMap::with(std::string name, ConverterFn fn, bool override_existing) const {
  if (name.empty()) throw ConvertError("operator name must not be empty");
  if (!fn) throw ConvertError("converter for '" + name + "' is empty");
  if (!override_existing && contains(name)) throw DuplicateOperatorError(name);
  ConvertMap copy = *this;
  copy.entries_.insert_or_assign(std::move(name), std::move(fn));
  return copy;
}

ConvertMap register_operator(const ConvertMap& map, std::string name, ConverterFn fn, bool override_existing) {
  return map.with(std::move(name), std::move(fn), override_existing);
}

namespace {

ConverterFn unary(OpKind kind) {
  return [kind](ConvertContext& ctx, const OperatorNode&, std::span<const ValueRef> in) {
    ctx.expect_operands(in, 1, 0);
    return ctx.emit(kind, {in[0]});
  };
}

ConverterFn binary(OpKind kind) {
  return [kind](ConvertContext& ctx, const OperatorNode&, std::span<const ValueRef> in) {
    ctx.expect_operands(in, 2, 0);
    return ctx.emit(kind, {in[0], in[1]});
  };
}

ValueRef convert_identity(ConvertContext& ctx, const OperatorNode&, std::span<const ValueRef> in) {
  ctx.expect_operands(in, 1, 0);
  OpAttrs attrs;
  attrs.new_shape = ctx.shape_of(in[0]);
  return ctx.emit(OpKind::Reshape, {in[0]}, attrs);
}

ValueRef convert_reshape(ConvertContext& ctx, const OperatorNode&, std::span<const ValueRef> in) {
  ctx.expect_operands(in, 1, 0);
  OpAttrs attrs;
  attrs.new_shape = ctx.attr_ints("new_shape");
  return ctx.emit(OpKind::Reshape, {in[0]}, attrs);
}

ValueRef convert_dense(ConvertContext& ctx, const OperatorNode&, std::span<const ValueRef> in) {
  ctx.expect_operands(in, 1, 2);
  OpAttrs attrs;
  attrs.units = ctx.attr_int("units");
  return ctx.emit(OpKind::Dense, {in[0], ctx.param(0), ctx.param(1)}, attrs);
}

ValueRef convert_conv1d(ConvertContext& ctx, const OperatorNode&, std::span<const ValueRef> in) {
  ctx.expect_operands(in, 1, 2);
  OpAttrs attrs;
  attrs.kernel_len = ctx.attr_int("kernel_len");
  attrs.stride = ctx.attr_int("stride");
  return ctx.emit(OpKind::Conv1dDwShared, {in[0], ctx.param(0), ctx.param(1)}, attrs);
}

ValueRef convert_gru(ConvertContext& ctx, const OperatorNode&, std::span<const ValueRef> in) {
  ctx.expect_operands(in, 1, 4);
  OpAttrs attrs;
  attrs.hidden = ctx.attr_int("hidden");
  return ctx.emit(OpKind::Gru, {in[0], ctx.param(0), ctx.param(1), ctx.param(2), ctx.param(3)}, attrs);
}

}  // namespace

ConvertMap default_convert_map() {
  ConvertMap map;
  map = map.with("identity", convert_identity, false);
  map = map.with("dense", convert_dense, false);
  map = map.with("conv1d_dw_shared", convert_conv1d, false);
  map = map.with("gru", convert_gru, false);
  map = map.with("softmax", unary(OpKind::Softmax), false);
  map = map.with("relu", unary(OpKind::Relu), false);
  map = map.with("sigmoid", unary(OpKind::Sigmoid), false);
  map = map.with("tanh", unary(OpKind::Tanh), false);
  map = map.with("add", binary(OpKind::Add), false);
  map = map.with("sub", binary(OpKind::Sub), false);
  map = map.with("mul", binary(OpKind::Mul), false);
  map = map.with("reshape", convert_reshape, false);
  map = map.with("last_timestep", unary(OpKind::LastTimestep), false);
  return map;
}

HirModule convert(const ModelGraph& graph, const ConvertMap& map) {
  HirBuilder builder(graph.name);
  std::map<std::string, ValueRef> values;
  for (const auto& in : graph.inputs) values[in.name] = builder.input(in.name, in.shape);
  for (const auto& [name, p] : graph.params) values[name] = builder.constant(name, p.spec.shape, p.data);

  for (const OperatorNode* node : topological_nodes(graph)) {
    const ConverterFn* fn = map.find(node->op_name);
    if (!fn) throw UnknownOperatorError(node->op_name, node->id);
    std::vector<ValueRef> inputs;
    for (const auto& ref : node->inputs) inputs.push_back(values.at(ref));
    std::vector<ValueRef> params;
    for (const auto& ref : node->param_refs) params.push_back(values.at(ref));
    ConvertContext ctx(builder, *node, std::move(params));
    ValueRef out = (*fn)(ctx, *node, inputs);
    if (!builder.has_value(out))
      throw ConvertError("converter for node '" + node->id + "' returned unknown value '" + out + "'");
    values[node->id] = out;
  }

  // Graph outputs must be op results named after their node; copy otherwise.
  for (const auto& out_node : graph.outputs) {
    ValueRef v = values.at(out_node);
    const bool is_op = builder.module().find_op(v) != nullptr;
    if ((!is_op || v != out_node) && !builder.has_value(out_node)) {
      OpAttrs attrs;
      attrs.new_shape = builder.shape_of(v);
      v = builder.op(out_node, OpKind::Reshape, {v}, attrs);
    }
    builder.output(v);
  }
  return std::move(builder).finish();
}

}  // namespace microforge
