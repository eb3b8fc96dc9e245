// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>

#include "microforge/frontend.hpp"
#include "microforge/interp.hpp"
#include "microforge/tir.hpp"
#include "microforge/zoo.hpp"
#include "support.hpp"

using namespace microforge;
using namespace microforge::tir;

namespace {

/// Single-op module: operand 0 is a graph input, the rest constants.
HirModule single_op(OpKind kind, const OpAttrs& attrs, const std::vector<TensorValue>& operands) {
  HirBuilder b("single");
  std::vector<ValueRef> refs;
  refs.push_back(b.input("in0", operands[0].shape));
  for (std::size_t i = 1; i < operands.size(); ++i) {
    const bool is_const = i >= 1 && operand_count(kind) > 2;
    refs.push_back(is_const ? b.constant("k" + std::to_string(i), operands[i].shape, operands[i].data)
                            : b.input("in" + std::to_string(i), operands[i].shape));
  }
  b.op("t", kind, refs, attrs);
  b.output("t");
  return std::move(b).finish();
}

std::vector<float> run_lowered(const TirFunc& f, const std::vector<TensorValue>& operands) {
  std::vector<std::vector<float>> storage;
  for (const auto& o : operands) storage.push_back(o.data);
  storage.emplace_back(static_cast<std::size_t>(f.params.back().size()), 0.0f);
  std::vector<std::span<float>> args;
  for (auto& s : storage) args.emplace_back(s);
  evaluate(f, args);
  return storage.back();
}

int count_loops(const std::vector<Stmt>& body) {
  int n = 0;
  for (const auto& s : body)
    if (const auto* l = std::get_if<ForLoop>(&s.node)) n += 1 + count_loops(l->body);
  return n;
}

}  // namespace

TEST_CASE("relu lowers to one loop with max(x, 0)") {
  const HirModule m = single_op(OpKind::Relu, {}, {TensorValue::zeros({1, 8})});
  const TirFunc f = lower_op(m, *m.find_op("t"));
  REQUIRE(f.body.size() == 1);
  const auto& loop = std::get<ForLoop>(f.body[0].node);
  CHECK(loop.extent == 8);
  REQUIRE(loop.body.size() == 1);
  const auto& a = std::get<Assign>(loop.body[0].node);
  CHECK(expr_to_string(*a.value) == "max(x[i0], 0)");
}

TEST_CASE("conv lowers to three nested loops") {
  OpAttrs a;
  a.kernel_len = 7;
  a.stride = 2;
  const HirModule m =
      single_op(OpKind::Conv1dDwShared, a, {TensorValue::zeros({1, 6, 128}), TensorValue::zeros({7}), TensorValue::zeros({1})});
  const TirFunc f = lower_op(m, *m.find_op("t"));
  std::vector<int64_t> extents;
  const std::vector<Stmt>* body = &f.body;
  while (!body->empty()) {
    const ForLoop* loop = nullptr;
    for (const auto& s : *body)
      if ((loop = std::get_if<ForLoop>(&s.node))) break;
    if (!loop) break;
    extents.push_back(loop->extent);
    body = &loop->body;
  }
  CHECK(extents == std::vector<int64_t>{6, 61, 7});
}

TEST_CASE("softmax lowers to max, exp-sum and divide loops") {
  const HirModule m = single_op(OpKind::Softmax, {}, {TensorValue::zeros({1, 21})});
  const TirFunc f = lower_op(m, *m.find_op("t"));
  std::vector<int64_t> loops;
  for (const auto& s : f.body)
    if (const auto* l = std::get_if<ForLoop>(&s.node)) loops.push_back(l->extent);
  CHECK(loops == std::vector<int64_t>{21, 21, 21});
  const std::string text = dump(f);
  CHECK(text.find("max(mx[0], x[i1])") != std::string::npos);
  CHECK(text.find("exp(") != std::string::npos);
}

TEST_CASE("gru is one fused function with the time loop outermost") {
  OpAttrs a;
  a.hidden = 16;
  mftest::Rng rng(1);
  const auto inst = mftest::random_instance(OpKind::Gru, rng);
  const HirModule m = single_op(OpKind::Gru, inst.attrs, inst.operands);
  const TirFunc f = lower_op(m, *m.find_op("t"));
  const int64_t steps = inst.operands[0].shape[2];
  bool found_time_loop = false;
  for (const auto& s : f.body)
    if (const auto* l = std::get_if<ForLoop>(&s.node)) found_time_loop = found_time_loop || l->extent == steps;
  CHECK((found_time_loop || steps == 1));
  CHECK(f.find_buffer("h") != nullptr);
  CHECK(f.find_buffer("hn") != nullptr);
}

TEST_CASE("accelerator-targeted ops are not lowered for the cpu") {
  HirModule m = single_op(OpKind::Relu, {}, {TensorValue::zeros({4})});
  m.find_op("t")->target = {"acc", "p", 0};
  CHECK_THROWS_AS(lower_op(m, *m.find_op("t")), LoweringError);
  CHECK_NOTHROW(lower_op_any_target(m, *m.find_op("t")));
}

TEST_CASE("lowered functions reproduce the interpreter") {
  mftest::Rng rng(2);
  for (OpKind kind : compute_kinds()) {
    CAPTURE(kind_name(kind));
    for (int i = 0; i < 40; ++i) {
      auto inst = mftest::random_instance(kind, rng);
      for (auto& v : inst.operands[0].data) v *= 4.0f;  // inputs in [-4, 4]
      const HirModule m = single_op(kind, inst.attrs, inst.operands);
      const TirFunc f = lower_op(m, *m.find_op("t"));
      CHECK(check_bounds(f).empty());
      const auto got = run_lowered(f, inst.operands);
      const auto want = interp_op(kind, inst.attrs, inst.operands).data;
      REQUIRE(got.size() == want.size());
      double worst = 0.0;
      for (std::size_t k = 0; k < got.size(); ++k) worst = std::max(worst, static_cast<double>(std::fabs(got[k] - want[k])));
      CHECK(worst <= 1e-6);
      // Same accumulation order, so the results are in fact identical.
      CHECK(std::memcmp(got.data(), want.data(), got.size() * sizeof(float)) == 0);
    }
  }
}

TEST_CASE("bounds checks pass for every op of random modules") {
  mftest::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const HirModule m = mftest::random_module(rng, 12);
    for (const auto& op : m.ops) {
      const auto errs = check_bounds(lower_op(m, op));
      CHECK(errs.empty());
    }
  }
}

TEST_CASE("bounds check catches bad accesses") {
  TirFunc f;
  f.name = "bad";
  f.params = {{"x", {4}, BufferRole::GraphInput}, {"y", {4}, BufferRole::GraphOutput}};
  f.body = {Stmt{ForLoop{"i0", 5, {Stmt{Assign{"y", AffineIndex::var("i0"), load("x", AffineIndex::var("i0"))}}}}}};
  CHECK(check_bounds(f).size() >= 1);
  f.body = {Stmt{Assign{"z", AffineIndex::constant(0), lit(1.0f)}}};
  CHECK_FALSE(check_bounds(f).empty());
  f.body = {Stmt{Assign{"y", AffineIndex::var("j"), lit(1.0f)}}};
  CHECK_FALSE(check_bounds(f).empty());
}

TEST_CASE("tir passes") {
  TirFunc f;
  f.name = "fold";
  f.params = {{"y", {1}, BufferRole::GraphOutput}};
  f.body = {Stmt{Assign{"y", AffineIndex::constant(0), binary(BinaryOp::Mul, lit(2.0f), lit(3.0f))}}};

  SUBCASE("empty pass list leaves the function unchanged") {
    const TirFunc g = run_tir_passes(f, {});
    CHECK(dump(g) == dump(f));
  }
  SUBCASE("constant folding") {
    const std::vector<TirPass> passes = {fold_constants_pass()};
    const TirFunc g = run_tir_passes(f, passes);
    const auto& a = std::get<Assign>(g.body[0].node);
    const auto* lit_node = std::get_if<Literal>(&a.value->node);
    REQUIRE(lit_node != nullptr);
    CHECK(lit_node->value == 6.0f);
  }
  SUBCASE("rejecting pass is named") {
    const std::vector<TirPass> passes = {
        {"reject_all", [](const TirFunc&) -> TirFunc { throw std::runtime_error("unsupported loop shape"); }}};
    try {
      run_tir_passes(f, passes);
      FAIL("expected TirPassError");
    } catch (const TirPassError& e) {
      CHECK(e.pass() == "reject_all");
      CHECK(std::string(e.what()).find("reject_all") != std::string::npos);
    }
  }
}

TEST_CASE("gesture ops all lower and pass bounds checks") {
  const HirModule m = convert(zoo::build_gesture_model({}, 3), default_convert_map());
  for (const auto& op : m.ops) {
    const TirFunc f = lower_op(m, op);
    CHECK(check_bounds(f).empty());
    CHECK(count_loops(f.body) >= 1);
    CHECK(f.source_op == op.id);
  }
}

TEST_CASE("c identifiers") {
  CHECK(c_identifier("conv1.kernel") == "conv1_kernel");
  CHECK(c_identifier("9lives") == "v_9lives");
  CHECK(c_identifier("") == "v_");
}
