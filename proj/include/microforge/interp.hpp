// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "microforge/hir.hpp"

namespace microforge {

/// Dense row-major f32 tensor.
struct TensorValue {
  Shape shape;
  std::vector<float> data;

  TensorValue() = default;
  TensorValue(Shape s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}
  static TensorValue zeros(Shape s) {
    auto n = static_cast<std::size_t>(element_count(s));
    return {std::move(s), std::vector<float>(n, 0.0f)};
  }

  friend bool operator==(const TensorValue&, const TensorValue&) = default;
};

using TensorMap = std::map<std::string, TensorValue>;

/// Evaluates one op. Accumulation order and intrinsic formulas match the
/// lowered loop nests so interpreter and generated C agree to rounding.
TensorValue interp_op(OpKind kind, const OpAttrs& attrs, const std::vector<TensorValue>& operands);

/// Runs the module on named inputs; returns every graph output by name.
/// Targets are ignored: accelerator regions execute with the same math.
TensorMap interp(const HirModule& m, const TensorMap& inputs);

/// Like interp, but returns every value (inputs, consts and op outputs).
TensorMap interp_values(const HirModule& m, const TensorMap& inputs);

/// Op kinds the interpreter implements.
std::set<OpKind> supported_kinds();

float sigmoidf(float x);

}  // namespace microforge
