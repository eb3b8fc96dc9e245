// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "microforge/interp.hpp"
#include "support.hpp"

using namespace microforge;

namespace {

TensorValue run1(OpKind kind, std::vector<TensorValue> operands, OpAttrs attrs = {}) {
  return interp_op(kind, attrs, operands);
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  const auto y = run1(OpKind::Softmax, {TensorValue({3}, {0, 0, 0})});
  for (float v : y.data) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("dense hand example") {
  OpAttrs a;
  a.units = 2;
  const auto y = run1(OpKind::Dense, {TensorValue({1, 1}, {1.0f}), TensorValue({2, 1}, {2, 3}), TensorValue({2}, {0, 0})}, a);
  CHECK(y.shape == Shape{1, 2});
  CHECK(y.data == std::vector<float>{2.0f, 3.0f});
}

TEST_CASE("conv on constant input") {
  OpAttrs a;
  a.kernel_len = 7;
  a.stride = 2;
  const auto y = run1(OpKind::Conv1dDwShared,
                      {TensorValue({1, 1, 9}, std::vector<float>(9, 1.0f)), TensorValue({7}, std::vector<float>(7, 1.0f)),
                       TensorValue({1}, {0.0f})},
                      a);
  CHECK(y.shape == Shape{1, 1, 2});
  CHECK(y.data == std::vector<float>{7.0f, 7.0f});
}

TEST_CASE("zero gru stays at zero") {
  OpAttrs a;
  a.hidden = 3;
  mftest::Rng rng(1);
  const auto y = run1(OpKind::Gru,
                      {TensorValue({1, 2, 5}, mftest::random_data(rng, 10)), TensorValue::zeros({9, 2}),
                       TensorValue::zeros({9, 3}), TensorValue::zeros({9}), TensorValue::zeros({9})},
                      a);
  CHECK(y.shape == Shape{1, 3, 5});
  for (float v : y.data) CHECK(v == 0.0f);
}

TEST_CASE("last timestep and sigmoid") {
  const auto y = run1(OpKind::LastTimestep, {TensorValue({1, 2, 3}, {1, 2, 3, 4, 5, 6})});
  CHECK(y.shape == Shape{1, 2});
  CHECK(y.data == std::vector<float>{3.0f, 6.0f});
  CHECK(run1(OpKind::Sigmoid, {TensorValue({1}, {0.0f})}).data[0] == 0.5f);
  CHECK(sigmoidf(0.0f) == 0.5f);
}

TEST_CASE("operand shape mismatch is rejected") {
  CHECK_THROWS_AS(run1(OpKind::Add, {TensorValue({2}, {1, 2}), TensorValue({3}, {1, 2, 3})}), ShapeError);
  HirBuilder b("m");
  b.input("x", {2});
  b.op("y", OpKind::Relu, {"x"});
  b.output("y");
  CHECK_THROWS(interp(b.module(), {{"x", TensorValue({3}, {1, 2, 3})}}));
  CHECK_THROWS(interp(b.module(), {}));
}

TEST_CASE("softmax rows sum to one and stay in (0, 1]") {
  mftest::Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const int64_t cols = mftest::pick(rng, 1, 30);
    const auto y = run1(OpKind::Softmax, {TensorValue({2, cols}, mftest::random_data(rng, 2 * cols, -20.0f, 20.0f))});
    for (int r = 0; r < 2; ++r) {
      double sum = 0.0;
      for (int64_t k = 0; k < cols; ++k) {
        const float v = y.data[static_cast<std::size_t>(r * cols + k)];
        CHECK(v > 0.0f);
        CHECK(v <= 1.0f);
        sum += v;
      }
      CHECK(std::fabs(sum - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("gru hidden state stays inside (-1, 1)") {
  mftest::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto inst = mftest::random_instance(OpKind::Gru, rng);
    for (auto& v : inst.operands[0].data) v *= 10.0f;
    const auto y = interp_op(OpKind::Gru, inst.attrs, inst.operands);
    for (float v : y.data) {
      CHECK(v > -1.0f);
      CHECK(v < 1.0f);
    }
  }
}

TEST_CASE("every op agrees with the brute-force oracle") {
  mftest::Rng rng(4);
  for (OpKind kind : compute_kinds()) {
    CAPTURE(kind_name(kind));
    for (int i = 0; i < 50; ++i) {
      const auto inst = mftest::random_instance(kind, rng);
      const auto got = interp_op(kind, inst.attrs, inst.operands);
      const auto want = mftest::brute::run(kind, inst.attrs, inst.operands);
      REQUIRE(got.data.size() == want.size());
      double worst = 0.0;
      for (std::size_t k = 0; k < want.size(); ++k) worst = std::max(worst, std::fabs(got.data[k] - want[k]));
      CHECK(worst <= 1e-6);
    }
  }
}

TEST_CASE("interpreter covers every compute kind") {
  const auto kinds = supported_kinds();
  for (OpKind k : compute_kinds()) CHECK(kinds.count(k) == 1);
  CHECK(kinds.count(OpKind::Input) == 0);
}

TEST_CASE("targets do not affect results") {
  mftest::Rng rng(5);
  HirModule m = mftest::random_module(rng);
  const auto inputs = mftest::random_inputs(m, rng);
  const auto before = interp(m, inputs);
  for (auto& op : m.ops) op.target = {"acc", "p", 0};
  CHECK(interp(m, inputs) == before);
}
