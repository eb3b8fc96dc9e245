// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "microforge/error.hpp"
#include "microforge/hir.hpp"
#include "microforge/model_format.hpp"

namespace microforge {

class UnknownOperatorError : public ConvertError {
 public:
  UnknownOperatorError(std::string op_name, std::string node)
      : ConvertError("unknown operator '" + op_name + "' at node '" + node + "'"),
        op_name_(std::move(op_name)),
        node_(std::move(node)) {}

  const std::string& op_name() const noexcept { return op_name_; }
  const std::string& node() const noexcept { return node_; }

 private:
  std::string op_name_;
  std::string node_;
};

class DuplicateOperatorError : public ConvertError {
 public:
  explicit DuplicateOperatorError(const std::string& name)
      : ConvertError("operator '" + name + "' is already registered (pass override to replace it)") {}
};

/// Handed to a converter while it translates one frontend node. New ops and
/// constants are named after the node: the bare node id, or `<id>/<suffix>`.
class ConvertContext {
 public:
  ConvertContext(HirBuilder& builder, const OperatorNode& node, std::vector<ValueRef> params)
      : builder_(builder), node_(node), params_(std::move(params)) {}

  const OperatorNode& node() const { return node_; }

  std::size_t param_count() const { return params_.size(); }
  const ValueRef& param(std::size_t i) const;
  /// Throws ConvertError unless the node carries exactly `data` inputs and
  /// `params` parameter references.
  void expect_operands(std::span<const ValueRef> inputs, std::size_t data, std::size_t params) const;

  int64_t attr_int(std::string_view key) const;
  double attr_float(std::string_view key) const;
  Shape attr_ints(std::string_view key) const;

  Shape shape_of(const ValueRef& value) const { return builder_.shape_of(value); }

  ValueRef emit(OpKind kind, std::vector<ValueRef> inputs, OpAttrs attrs = {}, std::string_view suffix = {});
  ValueRef constant(Shape shape, std::vector<float> data, std::string_view suffix);
  /// Constant of the given shape with every element equal to `value`.
  ValueRef filled(const Shape& shape, float value, std::string_view suffix);

 private:
  std::string name_for(std::string_view suffix) const;
  [[noreturn]] void fail(const std::string& what) const;

  HirBuilder& builder_;
  const OperatorNode& node_;
  std::vector<ValueRef> params_;
};

/// Translates one frontend node into HIR ops and returns the node's output value.
using ConverterFn =
    std::function<ValueRef(ConvertContext& ctx, const OperatorNode& node, std::span<const ValueRef> inputs)>;

/// Immutable operator-name -> converter dictionary.
class ConvertMap {
 public:
  const ConverterFn* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> names() const;

  /// Returns a copy with `name` bound to `fn`. Throws DuplicateOperatorError
  /// when the name exists and `override_existing` is false.
  ConvertMap with(std::string name, ConverterFn fn, bool override_existing) const;

 private:
  std::map<std::string, ConverterFn, std::less<>> entries_;
};

ConvertMap default_convert_map();

ConvertMap register_operator(const ConvertMap& map, std::string name, ConverterFn fn, bool override_existing = false);

/// Converts a validated model into a shape-inferred HirModule. Nodes are
/// visited in dependency order (ties by id), one converter call each.
HirModule convert(const ModelGraph& graph, const ConvertMap& map);

}  // namespace microforge
