// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/tir.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace microforge::tir {

std::string_view role_name(BufferRole role) {
  switch (role) {
    case BufferRole::GraphInput: return "input";
    case BufferRole::GraphOutput: return "output";
    case BufferRole::Param: return "param";
    case BufferRole::Scratch: return "scratch";
  }
  return "?";
}

AffineIndex operator+(AffineIndex a, const AffineIndex& b) {
  a.offset += b.offset;
  for (const auto& [var, coeff] : b.terms) {
    auto it = std::find_if(a.terms.begin(), a.terms.end(), [&](const auto& t) { return t.first == var; });
    if (it == a.terms.end()) a.terms.emplace_back(var, coeff);
    else it->second += coeff;
  }
  std::erase_if(a.terms, [](const auto& t) { return t.second == 0; });
  return a;
}

AffineIndex operator+(AffineIndex a, int64_t c) {
  a.offset += c;
  return a;
}

AffineIndex operator*(AffineIndex a, int64_t c) {
  a.offset *= c;
  for (auto& t : a.terms) t.second *= c;
  std::erase_if(a.terms, [](const auto& t) { return t.second == 0; });
  return a;
}

ExprPtr lit(float v) { return std::make_shared<const Expr>(Expr{Literal{v}}); }
ExprPtr load(std::string buffer, AffineIndex index) {
  return std::make_shared<const Expr>(Expr{Load{std::move(buffer), std::move(index)}});
}
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<const Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr unary(UnaryOp op, ExprPtr arg) { return std::make_shared<const Expr>(Expr{Unary{op, std::move(arg)}}); }

const Buffer* TirFunc::find_buffer(std::string_view n) const {
  for (const auto& b : params)
    if (b.name == n) return &b;
  for (const auto& b : locals)
    if (b.name == n) return &b;
  return nullptr;
}

namespace {

bool writes_in(const std::vector<Stmt>& body, std::string_view buffer) {
  for (const auto& s : body) {
    if (const auto* a = std::get_if<Assign>(&s.node)) {
      if (a->buffer == buffer) return true;
    } else if (writes_in(std::get<ForLoop>(s.node).body, buffer)) {
      return true;
    }
  }
  return false;
}

}  // namespace

bool TirFunc::writes(std::string_view buffer) const { return writes_in(body, buffer); }

std::string c_identifier(std::string_view text) {
  std::string out;
  for (char c : text) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    out += ok ? c : '_';
  }
  if (out.empty() || (out[0] >= '0' && out[0] <= '9')) out = "v_" + out;
  return out;
}

// ---------------------------------------------------------------------------
// Lowering

namespace {

/// Builds loop nests, skipping loops of extent 1 (their variable is 0).
class NestBuilder {
 public:
  AffineIndex var(int depth, int64_t extent) const {
    if (extent == 1) return AffineIndex::constant(0);
    return AffineIndex::var("i" + std::to_string(depth));
  }

  static std::vector<Stmt> loop(int depth, int64_t extent, std::vector<Stmt> body) {
    if (extent == 1) return body;
    std::vector<Stmt> out;
    out.push_back(Stmt{ForLoop{"i" + std::to_string(depth), extent, std::move(body)}});
    return out;
  }
};

Stmt assign(const std::string& buf, AffineIndex idx, ExprPtr value) {
  return Stmt{Assign{buf, std::move(idx), std::move(value)}};
}

void append(std::vector<Stmt>& dst, std::vector<Stmt> src) {
  for (auto& s : src) dst.push_back(std::move(s));
}

ExprPtr add(ExprPtr a, ExprPtr b) { return binary(BinaryOp::Add, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return binary(BinaryOp::Sub, std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return binary(BinaryOp::Mul, std::move(a), std::move(b)); }
ExprPtr div(ExprPtr a, ExprPtr b) { return binary(BinaryOp::Div, std::move(a), std::move(b)); }
ExprPtr sigmoid(ExprPtr x) {
  return div(lit(1.0f), add(lit(1.0f), unary(UnaryOp::Exp, sub(lit(0.0f), std::move(x)))));
}

BufferRole role_of(const HirModule& m, const ValueRef& v) {
  if (m.find_input(v)) return BufferRole::GraphInput;
  if (m.find_const(v)) return BufferRole::Param;
  if (m.is_output(v)) return BufferRole::GraphOutput;
  return BufferRole::Scratch;
}

Shape shape_or_throw(const HirModule& m, const ValueRef& v) {
  auto s = m.shape_of(v);
  if (!s) throw LoweringError("value '" + v + "' has no inferred shape");
  return *s;
}

/// Body for a flat elementwise op: y[i] = f(x0[i], x1[i], ...).
std::vector<Stmt> elementwise(int64_t count, const std::function<ExprPtr(const AffineIndex&)>& f) {
  NestBuilder nb;
  auto i = nb.var(0, count);
  return NestBuilder::loop(0, count, {assign("y", i, f(i))});
}

void lower_dense(const Shape& x, const HirOp& op, TirFunc& f) {
  NestBuilder nb;
  const int64_t in = x.back(), rows = element_count(x) / in, units = op.attrs.units;
  auto r = nb.var(0, rows), u = nb.var(1, units), k = nb.var(2, in);
  auto y_idx = r * units + u;
  std::vector<Stmt> inner{assign("y", y_idx, load("b", u))};
  append(inner, NestBuilder::loop(
                    2, in, {assign("y", y_idx, add(load("y", y_idx), mul(load("w", u * in + k), load("x", r * in + k))))}));
  f.body = NestBuilder::loop(0, rows, NestBuilder::loop(1, units, std::move(inner)));
}

void lower_conv1d(const Shape& x, const HirOp& op, TirFunc& f) {
  NestBuilder nb;
  const int64_t channels = x[1], len = x[2], kl = op.attrs.kernel_len, stride = op.attrs.stride;
  const int64_t out_len = (len - kl) / stride + 1;
  auto c = nb.var(0, channels), t = nb.var(1, out_len), k = nb.var(2, kl);
  auto y_idx = c * out_len + t;
  std::vector<Stmt> inner{assign("y", y_idx, load("b", AffineIndex::constant(0)))};
  append(inner, NestBuilder::loop(2, kl,
                                  {assign("y", y_idx, add(load("y", y_idx),
                                                          mul(load("w", k), load("x", c * len + t * stride + k))))}));
  f.body = NestBuilder::loop(0, channels, NestBuilder::loop(1, out_len, std::move(inner)));
}

void lower_softmax(const Shape& x, TirFunc& f) {
  NestBuilder nb;
  const int64_t cols = x.back(), rows = element_count(x) / cols;
  f.locals = {{"mx", {1}, BufferRole::Scratch}, {"sum", {1}, BufferRole::Scratch}};
  const auto zero = AffineIndex::constant(0);
  auto r = nb.var(0, rows), i = nb.var(1, cols);
  auto at = r * cols + i;
  std::vector<Stmt> row;
  row.push_back(assign("mx", zero, load("x", r * cols)));
  append(row, NestBuilder::loop(1, cols, {assign("mx", zero, binary(BinaryOp::Max, load("mx", zero), load("x", at)))}));
  row.push_back(assign("sum", zero, lit(0.0f)));
  append(row, NestBuilder::loop(1, cols,
                                {assign("y", at, unary(UnaryOp::Exp, sub(load("x", at), load("mx", zero)))),
                                 assign("sum", zero, add(load("sum", zero), load("y", at)))}));
  append(row, NestBuilder::loop(1, cols, {assign("y", at, div(load("y", at), load("sum", zero)))}));
  f.body = NestBuilder::loop(0, rows, std::move(row));
}

// Gate rows ordered r, z, n. `h` holds the previous state and `hn` the new
// one; hn is copied back into h and into the output column after each step.
void lower_gru(const Shape& x, const HirOp& op, TirFunc& f) {
  NestBuilder nb;
  const int64_t in = x[1], steps = x[2], hidden = op.attrs.hidden;
  f.locals = {{"h", {hidden}, BufferRole::Scratch},  {"hn", {hidden}, BufferRole::Scratch},
              {"ax", {1}, BufferRole::Scratch},      {"ah", {1}, BufferRole::Scratch},
              {"r", {1}, BufferRole::Scratch},       {"z", {1}, BufferRole::Scratch}};
  const auto zero = AffineIndex::constant(0);
  auto t = nb.var(0, steps), j = nb.var(1, hidden), k = nb.var(2, in), kh = nb.var(2, hidden);

  // ax = b_x[row] + W_x[row, :] . x[:, t] ;  ah = b_h[row] + W_h[row, :] . h
  auto gate_sums = [&](int64_t gate) {
    auto row = j + gate * hidden;
    std::vector<Stmt> s{assign("ax", zero, load("b_x", row))};
    append(s, NestBuilder::loop(2, in,
                                {assign("ax", zero, add(load("ax", zero), mul(load("w_x", row * in + k),
                                                                              load("x", k * steps + t))))}));
    s.push_back(assign("ah", zero, load("b_h", row)));
    append(s, NestBuilder::loop(2, hidden,
                                {assign("ah", zero, add(load("ah", zero), mul(load("w_h", row * hidden + kh),
                                                                              load("h", kh))))}));
    return s;
  };

  std::vector<Stmt> unit;
  append(unit, gate_sums(0));
  unit.push_back(assign("r", zero, sigmoid(add(load("ax", zero), load("ah", zero)))));
  append(unit, gate_sums(1));
  unit.push_back(assign("z", zero, sigmoid(add(load("ax", zero), load("ah", zero)))));
  append(unit, gate_sums(2));
  auto n = unary(UnaryOp::Tanh, add(load("ax", zero), mul(load("r", zero), load("ah", zero))));
  unit.push_back(assign("hn", j, add(mul(sub(lit(1.0f), load("z", zero)), n), mul(load("z", zero), load("h", j)))));

  std::vector<Stmt> step = NestBuilder::loop(1, hidden, std::move(unit));
  append(step, NestBuilder::loop(1, hidden, {assign("h", j, load("hn", j)), assign("y", j * steps + t, load("hn", j))}));

  f.body = NestBuilder::loop(1, hidden, {assign("h", j, lit(0.0f))});
  append(f.body, NestBuilder::loop(0, steps, std::move(step)));
}

TirFunc lower_impl(const HirModule& m, const HirOp& op) {
  if (!op.out_shape) throw LoweringError("op '" + op.id + "' is not shape-inferred");
  TirFunc f;
  f.name = c_identifier(op.id);
  f.source_op = op.id;

  static const std::map<OpKind, std::vector<std::string>> operand_names = {
      {OpKind::Dense, {"x", "w", "b"}},
      {OpKind::Conv1dDwShared, {"x", "w", "b"}},
      {OpKind::Gru, {"x", "w_x", "w_h", "b_x", "b_h"}},
      {OpKind::Add, {"a", "b"}},
      {OpKind::Sub, {"a", "b"}},
      {OpKind::Mul, {"a", "b"}},
  };
  auto it = operand_names.find(op.kind);
  for (std::size_t i = 0; i < op.inputs.size(); ++i) {
    std::string name = it != operand_names.end() ? it->second.at(i) : "x";
    f.params.push_back({name, shape_or_throw(m, op.inputs[i]), role_of(m, op.inputs[i])});
  }
  f.params.push_back({"y", *op.out_shape, role_of(m, op.id)});

  const Shape x = f.params.front().shape;
  const int64_t count = element_count(*op.out_shape);
  switch (op.kind) {
    case OpKind::Dense: lower_dense(x, op, f); break;
    case OpKind::Conv1dDwShared: lower_conv1d(x, op, f); break;
    case OpKind::Gru: lower_gru(x, op, f); break;
    case OpKind::Softmax: lower_softmax(x, f); break;
    case OpKind::Relu:
      f.body = elementwise(count, [](const AffineIndex& i) { return binary(BinaryOp::Max, load("x", i), lit(0.0f)); });
      break;
    case OpKind::Sigmoid:
      f.body = elementwise(count, [](const AffineIndex& i) { return sigmoid(load("x", i)); });
      break;
    case OpKind::Tanh:
      f.body = elementwise(count, [](const AffineIndex& i) { return unary(UnaryOp::Tanh, load("x", i)); });
      break;
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul: {
      const BinaryOp bop = op.kind == OpKind::Add ? BinaryOp::Add : op.kind == OpKind::Sub ? BinaryOp::Sub : BinaryOp::Mul;
      f.body = elementwise(count, [bop](const AffineIndex& i) { return binary(bop, load("a", i), load("b", i)); });
      break;
    }
    case OpKind::Reshape:
      f.body = elementwise(count, [](const AffineIndex& i) { return load("x", i); });
      break;
    case OpKind::LastTimestep: {
      NestBuilder nb;
      const int64_t channels = x[1], steps = x[2];
      auto c = nb.var(0, channels);
      f.body = NestBuilder::loop(0, channels, {assign("y", c, load("x", c * steps + (steps - 1)))});
      break;
    }
    case OpKind::Input:
    case OpKind::Const: throw LoweringError("leaf value '" + op.id + "' cannot be lowered");
  }
  return f;
}

}  // namespace

TirFunc lower_op(const HirModule& m, const HirOp& op) {
  if (!op.target.is_cpu())
    throw LoweringError("op '" + op.id + "' targets accelerator '" + op.target.accel +
                        "'; only CPU ops lower to loop nests");
  return lower_impl(m, op);
}

TirFunc lower_op_any_target(const HirModule& m, const HirOp& op) { return lower_impl(m, op); }

// ---------------------------------------------------------------------------
// Passes

TirFunc run_tir_passes(const TirFunc& f, std::span<const TirPass> passes) {
  TirFunc cur = f;
  for (const auto& pass : passes) {
    try {
      cur = pass.run(cur);
    } catch (const std::exception& e) {
      throw TirPassError(pass.name, "TIR pass '" + pass.name + "' rejected '" + f.name + "': " + e.what());
    }
  }
  return cur;
}

namespace {

float apply(BinaryOp op, float a, float b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div: return a / b;
    case BinaryOp::Max: return std::fmax(a, b);
  }
  return 0.0f;
}

float apply(UnaryOp op, float a) {
  switch (op) {
    case UnaryOp::Exp: return std::exp(a);
    case UnaryOp::Tanh: return std::tanh(a);
  }
  return 0.0f;
}

ExprPtr fold(const ExprPtr& e) {
  if (const auto* b = std::get_if<Binary>(&e->node)) {
    auto l = fold(b->lhs), r = fold(b->rhs);
    const auto* ll = std::get_if<Literal>(&l->node);
    const auto* rl = std::get_if<Literal>(&r->node);
    if (ll && rl) return lit(apply(b->op, ll->value, rl->value));
    return binary(b->op, l, r);
  }
  if (const auto* u = std::get_if<Unary>(&e->node)) {
    auto a = fold(u->arg);
    if (const auto* al = std::get_if<Literal>(&a->node)) return lit(apply(u->op, al->value));
    return unary(u->op, a);
  }
  return e;
}

std::vector<Stmt> fold_body(const std::vector<Stmt>& body) {
  std::vector<Stmt> out;
  for (const auto& s : body) {
    if (const auto* a = std::get_if<Assign>(&s.node)) {
      out.push_back(Stmt{Assign{a->buffer, a->index, fold(a->value)}});
    } else {
      const auto& l = std::get<ForLoop>(s.node);
      out.push_back(Stmt{ForLoop{l.var, l.extent, fold_body(l.body)}});
    }
  }
  return out;
}

}  // namespace

TirPass fold_constants_pass() {
  return {"fold_constants", [](const TirFunc& f) {
            TirFunc out = f;
            out.body = fold_body(f.body);
            return out;
          }};
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

class Evaluator {
 public:
  Evaluator(const TirFunc& f, std::span<const std::span<float>> args) {
    if (args.size() != f.params.size())
      throw LoweringError("'" + f.name + "' expects " + std::to_string(f.params.size()) + " arguments");
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (static_cast<int64_t>(args[i].size()) != f.params[i].size())
        throw LoweringError("argument '" + f.params[i].name + "' of '" + f.name + "' has wrong length");
      buffers_[f.params[i].name] = args[i];
    }
    for (const auto& l : f.locals) {
      storage_.emplace_back(static_cast<std::size_t>(l.size()), 0.0f);
      buffers_[l.name] = storage_.back();
    }
  }

  void run(const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (const auto* a = std::get_if<Assign>(&s.node)) {
        const float v = eval(*a->value);
        at(a->buffer, a->index) = v;
      } else {
        const auto& l = std::get<ForLoop>(s.node);
        for (int64_t i = 0; i < l.extent; ++i) {
          vars_[l.var] = i;
          run(l.body);
        }
        vars_.erase(l.var);
      }
    }
  }

 private:
  float& at(const std::string& buf, const AffineIndex& idx) {
    int64_t i = idx.offset;
    for (const auto& [var, coeff] : idx.terms) i += coeff * vars_.at(var);
    auto& span = buffers_.at(buf);
    if (i < 0 || i >= static_cast<int64_t>(span.size()))
      throw LoweringError("out-of-bounds access " + buf + "[" + std::to_string(i) + "]");
    return span[static_cast<std::size_t>(i)];
  }

  float eval(const Expr& e) {
    return std::visit(
        [&](const auto& n) -> float {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Literal>) return n.value;
          else if constexpr (std::is_same_v<T, Load>) return at(n.buffer, n.index);
          else if constexpr (std::is_same_v<T, Binary>) {
            const float a = eval(*n.lhs);
            const float b = eval(*n.rhs);
            return apply(n.op, a, b);
          } else {
            return apply(n.op, eval(*n.arg));
          }
        },
        e.node);
  }

  std::map<std::string, std::span<float>> buffers_;
  std::map<std::string, int64_t> vars_;
  std::vector<std::vector<float>> storage_;
};

}  // namespace

void evaluate(const TirFunc& f, std::span<const std::span<float>> args) {
  Evaluator ev(f, args);
  ev.run(f.body);
}

// ---------------------------------------------------------------------------
// Static bounds checks

namespace {

struct BoundsChecker {
  const TirFunc& f;
  std::map<std::string, int64_t> extents;
  std::vector<std::string> errors;

  void access(const std::string& buf, const AffineIndex& idx, std::string_view what) {
    const Buffer* b = f.find_buffer(buf);
    if (!b) {
      errors.push_back(std::string(what) + " of undeclared buffer '" + buf + "'");
      return;
    }
    int64_t lo = idx.offset, hi = idx.offset;
    for (const auto& [var, coeff] : idx.terms) {
      auto it = extents.find(var);
      if (it == extents.end()) {
        errors.push_back(std::string(what) + " of '" + buf + "' uses unbound variable '" + var + "'");
        return;
      }
      const int64_t top = coeff * (it->second - 1);
      lo += std::min<int64_t>(0, top);
      hi += std::max<int64_t>(0, top);
    }
    if (lo < 0 || hi >= b->size())
      errors.push_back(std::string(what) + " of '" + buf + "' spans [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "] outside [0, " + std::to_string(b->size() - 1) + "]");
  }

  void expr(const Expr& e) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Load>) access(n.buffer, n.index, "load");
          else if constexpr (std::is_same_v<T, Binary>) {
            expr(*n.lhs);
            expr(*n.rhs);
          } else if constexpr (std::is_same_v<T, Unary>) expr(*n.arg);
        },
        e.node);
  }

  void body(const std::vector<Stmt>& stmts) {
    for (const auto& s : stmts) {
      if (const auto* a = std::get_if<Assign>(&s.node)) {
        access(a->buffer, a->index, "store");
        expr(*a->value);
      } else {
        const auto& l = std::get<ForLoop>(s.node);
        if (l.extent < 1) errors.push_back("loop '" + l.var + "' has extent " + std::to_string(l.extent));
        if (extents.count(l.var)) errors.push_back("loop variable '" + l.var + "' shadows an outer loop");
        extents[l.var] = l.extent;
        body(l.body);
        extents.erase(l.var);
      }
    }
  }
};

}  // namespace

std::vector<std::string> check_bounds(const TirFunc& f) {
  BoundsChecker bc{f, {}, {}};
  bc.body(f.body);
  return bc.errors;
}

// ---------------------------------------------------------------------------
// Text dump

namespace {

std::string index_to_string(const AffineIndex& idx) {
  std::string s;
  for (const auto& [var, coeff] : idx.terms) {
    if (!s.empty()) s += " + ";
    s += coeff == 1 ? var : var + "*" + std::to_string(coeff);
  }
  if (idx.offset != 0 || s.empty()) {
    if (!s.empty()) s += " + ";
    s += std::to_string(idx.offset);
  }
  return s;
}

std::string float_text(float v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, end);
}

void dump_body(std::ostringstream& os, const std::vector<Stmt>& body, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& s : body) {
    if (const auto* a = std::get_if<Assign>(&s.node)) {
      os << pad << a->buffer << "[" << index_to_string(a->index) << "] = " << expr_to_string(*a->value) << "\n";
    } else {
      const auto& l = std::get<ForLoop>(s.node);
      os << pad << "for " << l.var << " in 0.." << l.extent << ":\n";
      dump_body(os, l.body, depth + 1);
    }
  }
}

}  // namespace

std::string expr_to_string(const Expr& e) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) return float_text(n.value);
        else if constexpr (std::is_same_v<T, Load>) return n.buffer + "[" + index_to_string(n.index) + "]";
        else if constexpr (std::is_same_v<T, Binary>) {
          const char* sym[] = {"+", "-", "*", "/"};
          if (n.op == BinaryOp::Max) return "max(" + expr_to_string(*n.lhs) + ", " + expr_to_string(*n.rhs) + ")";
          return "(" + expr_to_string(*n.lhs) + " " + sym[static_cast<int>(n.op)] + " " + expr_to_string(*n.rhs) + ")";
        } else {
          return std::string(n.op == UnaryOp::Exp ? "exp(" : "tanh(") + expr_to_string(*n.arg) + ")";
        }
      },
      e.node);
}

std::string dump(const TirFunc& f) {
  std::ostringstream os;
  os << "func " << f.name << "(";
  for (std::size_t i = 0; i < f.params.size(); ++i)
    os << (i ? ", " : "") << f.params[i].name << ": f32" << shape_to_string(f.params[i].shape) << " "
       << role_name(f.params[i].role);
  os << ")  // " << f.source_op << "\n";
  for (const auto& l : f.locals) os << "  local " << l.name << ": f32" << shape_to_string(l.shape) << "\n";
  dump_body(os, f.body, 1);
  return os.str();
}

}  // namespace microforge::tir
