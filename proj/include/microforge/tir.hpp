// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "microforge/error.hpp"
#include "microforge/hir.hpp"

namespace microforge::tir {

enum class BufferRole { GraphInput, GraphOutput, Param, Scratch };

std::string_view role_name(BufferRole role);

struct Buffer {
  std::string name;
  Shape shape;
  BufferRole role = BufferRole::Scratch;

  int64_t size() const { return element_count(shape); }

  friend bool operator==(const Buffer&, const Buffer&) = default;
};

/// offset + sum(coeff * var). Loop variables range over [0, extent).
struct AffineIndex {
  int64_t offset = 0;
  std::vector<std::pair<std::string, int64_t>> terms;

  static AffineIndex constant(int64_t c) { return {c, {}}; }
  static AffineIndex var(std::string name) { return {0, {{std::move(name), 1}}}; }

  friend AffineIndex operator+(AffineIndex a, const AffineIndex& b);
  friend AffineIndex operator+(AffineIndex a, int64_t c);
  friend AffineIndex operator*(AffineIndex a, int64_t c);
  friend bool operator==(const AffineIndex&, const AffineIndex&) = default;
};

enum class BinaryOp { Add, Sub, Mul, Div, Max };
enum class UnaryOp { Exp, Tanh };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Literal {
  float value;
};
struct Load {
  std::string buffer;
  AffineIndex index;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs, rhs;
};
struct Unary {
  UnaryOp op;
  ExprPtr arg;
};

struct Expr {
  std::variant<Literal, Load, Binary, Unary> node;
};

ExprPtr lit(float v);
ExprPtr load(std::string buffer, AffineIndex index);
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr unary(UnaryOp op, ExprPtr arg);

struct Stmt;

struct ForLoop {
  std::string var;
  int64_t extent = 0;
  std::vector<Stmt> body;
};

struct Assign {
  std::string buffer;
  AffineIndex index;
  ExprPtr value;
};

struct Stmt {
  std::variant<ForLoop, Assign> node;
};

/// Loop nest for one op instance. `params` are bound positionally at the
/// call site; `locals` are function-private scratch arrays.
struct TirFunc {
  std::string name;
  std::vector<Buffer> params;
  std::vector<Buffer> locals;
  std::vector<Stmt> body;
  std::string source_op;

  const Buffer* find_buffer(std::string_view name) const;
  /// True when some Assign in the body targets `buffer`.
  bool writes(std::string_view buffer) const;
};

class LoweringError : public Error {
 public:
  explicit LoweringError(const std::string& message) : Error(Stage::Lower, message) {}
};

class TirPassError : public Error {
 public:
  TirPassError(std::string pass, const std::string& message)
      : Error(Stage::Lower, message), pass_(std::move(pass)) {}
  const std::string& pass() const noexcept { return pass_; }

 private:
  std::string pass_;
};

/// Lowers a CPU-targeted, shape-inferred op. Throws LoweringError for
/// accelerator-targeted ops.
TirFunc lower_op(const HirModule& m, const HirOp& op);

/// Lowers regardless of target. Used to build the reference functions that
/// accelerator TIR passes operate on.
TirFunc lower_op_any_target(const HirModule& m, const HirOp& op);

struct TirPass {
  std::string name;
  /// May throw to reject a function; run_tir_passes attaches the pass name.
  std::function<TirFunc(const TirFunc&)> run;
};

TirFunc run_tir_passes(const TirFunc& f, std::span<const TirPass> passes);

/// Folds Binary/Unary nodes whose operands are all literals.
TirPass fold_constants_pass();

/// Executes the function on positional argument buffers (one per param).
void evaluate(const TirFunc& f, std::span<const std::span<float>> args);

/// Static checks: every referenced buffer and loop variable is declared and
/// every access stays inside its buffer. Returns one message per violation.
std::vector<std::string> check_bounds(const TirFunc& f);

/// One statement per line, indented by loop depth.
std::string dump(const TirFunc& f);
std::string expr_to_string(const Expr& e);

/// Identifier safe for C: other characters become `_`; empty or digit-led names get a `v_` prefix.
std::string c_identifier(std::string_view text);

}  // namespace microforge::tir
