// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "microforge/accel.hpp"
#include "microforge/hir.hpp"
#include "microforge/tir.hpp"

namespace microforge {

/// Call of a lowered CPU function; `args` bind its params positionally.
struct FuncCall {
  std::size_t func = 0;
  std::vector<ValueRef> args;
};

/// Call of a registered accelerator kernel covering one matched region.
struct ExternCall {
  std::string accel;
  std::string pattern;
  std::string symbol;
  std::string signature;
  int region = -1;
  std::vector<std::string> ops;
  std::vector<ValueRef> operands;
  ValueRef output;
  std::vector<int32_t> dims;
  /// Reference loop nests of the region after the accelerator's TIR passes.
  std::vector<tir::TirFunc> prime_funcs;
};

using Call = std::variant<FuncCall, ExternCall>;

struct LoweredModule {
  std::vector<tir::TirFunc> funcs;
  std::vector<Call> calls;

  std::size_t extern_call_count() const;
};

/// One TirFunc per CPU op and one ExternCall per accelerator region, in
/// schedule order. A region is issued at the position of its last op.
/// Function names are `op<k>_<id>` so they stay unique after sanitizing.
LoweredModule lower_module(const HirModule& m, const std::vector<std::string>& schedule,
                           const AccelRegistry& registry = {});

/// Defs and uses of every call, for liveness analysis.
struct CallUse {
  std::vector<ValueRef> defs;
  std::vector<ValueRef> uses;
};
std::vector<CallUse> call_uses(const LoweredModule& lowered);

std::string dump(const LoweredModule& lowered);

}  // namespace microforge
