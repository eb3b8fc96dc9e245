// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "microforge/accel.hpp"
#include "microforge/frontend.hpp"
#include "microforge/interp.hpp"
#include "microforge/zoo.hpp"
#include "support.hpp"

using namespace microforge;

namespace {

HirModule gesture() { return infer_shapes(convert(zoo::build_gesture_model({}, 1), default_convert_map())); }

AcceleratorDesc accel(std::string name, std::vector<Pattern> patterns) {
  AcceleratorDesc d;
  d.name = std::move(name);
  d.patterns = std::move(patterns);
  return d;
}

AccelRegistry single(AcceleratorDesc d) { return register_accelerator({}, std::move(d)); }

}  // namespace

TEST_CASE("registration") {
  const AccelRegistry r = register_accelerator({}, mac_engine());
  CHECK(r.accelerators().size() == 1);
  CHECK(r.find("mac_engine") != nullptr);
  CHECK_THROWS_AS(register_accelerator(r, mac_engine()), RegistryError);
  CHECK_NOTHROW(register_accelerator(r, accel("empty", {})));
  CHECK_THROWS_AS(register_accelerator({}, accel("1bad", {})), RegistryError);
  CHECK_THROWS_AS(register_accelerator({}, accel("bad-name", {})), RegistryError);
  CHECK_THROWS_AS(register_accelerator({}, accel("dup", {{"p", {OpKind::Dense}}, {"p", {OpKind::Relu}}})),
                  RegistryError);
  CHECK_THROWS_AS(register_accelerator({}, accel("nochain", {{"p", {}}})), RegistryError);

  const AccelRegistry two = register_accelerator(r, accel("second", {}));
  CHECK(two.accelerators()[0].name == "mac_engine");
  CHECK(two.accelerators()[1].name == "second");
}

TEST_CASE("partition of the gesture model") {
  const HirModule m = gesture();

  SUBCASE("dense only") {
    const auto r = partition(m, single(accel("mac_engine", {{"dense", {OpKind::Dense}}})));
    CHECK(r.report.accel_count() == 1);
    CHECK(r.report.cpu_count() == 5);
    CHECK(r.report.assignment.at("fc") == "mac_engine");
    CHECK(r.module.find_op("fc")->target.accel == "mac_engine");
  }
  SUBCASE("empty registry") {
    const auto r = partition(m, {});
    CHECK(r.report.cpu_count() == 6);
    CHECK(r.report.accel_count() == 0);
    CHECK(r.report.regions.empty());
    CHECK(r.module == m);
  }
  SUBCASE("built-in mac_engine matches dense and both conv stages") {
    const auto r = partition(m, single(mac_engine()));
    CHECK(r.report.accel_count() == 3);
    CHECK(r.report.to_text().rfind("cpu: 3, accel: 3", 0) == 0);
  }
  SUBCASE("chain dense -> softmax is one region") {
    const auto r = partition(m, single(accel("mac_engine", {{"dense_softmax", {OpKind::Dense, OpKind::Softmax}}})));
    REQUIRE(r.report.regions.size() == 1);
    CHECK(r.report.regions[0].ops == std::vector<std::string>{"fc", "probs"});
    CHECK(r.report.accel_count() == 2);
    CHECK(r.module.find_op("fc")->target.region == r.module.find_op("probs")->target.region);
  }
  SUBCASE("accelerator with no patterns is the identity") {
    const auto r = partition(m, single(accel("idle", {})));
    CHECK(r.report.accel_count() == 0);
    CHECK(r.report.counts.at("idle") == 0);
  }
}

TEST_CASE("chains need single-consumer internal edges") {
  HirBuilder b("fanout");
  b.input("x", {1, 4});
  b.op("a", OpKind::Relu, {"x"});
  b.op("b", OpKind::Tanh, {"a"});
  b.op("c", OpKind::Sigmoid, {"a"});
  b.op("d", OpKind::Add, {"b", "c"});
  b.output("d");
  const auto r = partition(b.module(), single(accel("acc", {{"relu_tanh", {OpKind::Relu, OpKind::Tanh}}})));
  CHECK(r.report.accel_count() == 0);

  HirBuilder c("out");
  c.input("x", {1, 4});
  c.op("a", OpKind::Relu, {"x"});
  c.op("b", OpKind::Tanh, {"a"});
  c.output("a");
  c.output("b");
  CHECK(partition(c.module(), single(accel("acc", {{"relu_tanh", {OpKind::Relu, OpKind::Tanh}}}))).report.accel_count() ==
        0);
}

TEST_CASE("priority first, then registration order") {
  const HirModule m = gesture();
  SUBCASE("higher priority pattern wins the overlap") {
    AcceleratorDesc d = accel("acc", {{"single", {OpKind::Dense}, 0}, {"chain", {OpKind::Dense, OpKind::Softmax}, 5}});
    const auto r = partition(m, single(d));
    REQUIRE(r.report.regions.size() == 1);
    CHECK(r.report.regions[0].pattern == "chain");
  }
  SUBCASE("equal priority: first registered accelerator wins") {
    AccelRegistry reg = register_accelerator({}, accel("first", {{"dense", {OpKind::Dense}}}));
    reg = register_accelerator(reg, accel("second", {{"dense", {OpKind::Dense}}}));
    CHECK(partition(m, reg).report.assignment.at("fc") == "first");
  }
  SUBCASE("later accelerator with higher priority wins") {
    AccelRegistry reg = register_accelerator({}, accel("first", {{"dense", {OpKind::Dense}, 1}}));
    reg = register_accelerator(reg, accel("second", {{"dense", {OpKind::Dense}, 2}}));
    CHECK(partition(m, reg).report.assignment.at("fc") == "second");
  }
}

TEST_CASE("predicate filters candidate ops") {
  Pattern p{"wide", {OpKind::Conv1dDwShared}, 0,
            [](const HirOp& op, const HirModule&) { return op.out_shape && op.out_shape->at(2) > 50; }};
  const auto r = partition(gesture(), single(accel("acc", {p})));
  CHECK(r.report.accel_count() == 1);
  CHECK(r.report.assignment.at("conv1") == "acc");
}

TEST_CASE("graph passes see only their own regions") {
  std::vector<std::vector<std::string>> seen;
  AcceleratorDesc d = mac_engine();
  d.graph_passes = {{"record", [&](const HirModule& m, const MatchedRegion& region) {
                       seen.push_back(region.ops);
                       return m;
                     }}};
  AccelRegistry reg = register_accelerator({}, d);
  reg = register_accelerator(reg, accel("other", {{"sm", {OpKind::Softmax}}}));
  partition(gesture(), reg);
  CHECK(seen.size() == 3);
  for (const auto& ops : seen) CHECK(ops != std::vector<std::string>{"probs"});
}

TEST_CASE("random partitions: non-overlap, full assignment, determinism, neutrality") {
  mftest::Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const HirModule m = mftest::random_module(rng, 12);
    const AccelRegistry reg = mftest::random_registry(rng);
    const auto r = partition(m, reg);
    CHECK(r.report.assignment.size() == m.ops.size());
    std::set<std::string> in_regions;
    for (const auto& region : r.report.regions)
      for (const auto& op : region.ops) CHECK(in_regions.insert(op).second);
    int total = 0;
    for (const auto& [k, v] : r.report.counts) total += v;
    CHECK(total == static_cast<int>(m.ops.size()));
    CHECK(partition(m, reg).report.to_json() == r.report.to_json());
    const auto inputs = mftest::random_inputs(m, rng);
    CHECK(interp(r.module, inputs) == interp(m, inputs));
  }
}

TEST_CASE("extern interface") {
  const AcceleratorDesc mac = mac_engine();
  CHECK(extern_signature(mac, *mac.find_pattern("dense")) ==
        "int32_t mac_engine_dense(const float*, const float*, const float*, float*, const int32_t*)");
  CHECK(mac.symbol("conv1d") == "mac_engine_conv1d");

  const HirModule m = gesture();
  const auto r = partition(m, single(mac));
  std::vector<std::vector<int32_t>> conv_dims;
  for (const auto& region : r.report.regions) {
    if (region.pattern == "dense") {
      CHECK(extern_dims(r.module, region) == std::vector<int32_t>{16, 21, 1});
      CHECK(extern_operands(r.module, region) == std::vector<ValueRef>{"last", "fc.weight", "fc.bias"});
    } else {
      conv_dims.push_back(extern_dims(r.module, region));
    }
  }
  // Same symbol for both conv instances, different call-site dims.
  REQUIRE(conv_dims.size() == 2);
  CHECK(conv_dims[0] == std::vector<int32_t>{6, 128, 7, 2, 61});
  CHECK(conv_dims[1] == std::vector<int32_t>{6, 61, 7, 2, 28});

  Pattern chain{"ds", {OpKind::Dense, OpKind::Softmax}};
  CHECK(extern_operand_count(chain) == 3);
  AcceleratorDesc custom = accel("npu", {chain});
  custom.symbol_scheme = [](std::string_view a, std::string_view p) { return std::string(a) + "_run_" + std::string(p); };
  CHECK(extern_signature(custom, chain) == "int32_t npu_run_ds(const float*, const float*, const float*, float*, const int32_t*)");
}

TEST_CASE("report formats") {
  const auto r = partition(gesture(), single(mac_engine()));
  const auto j = r.report.to_json();
  CHECK(j["cpu"] == 3);
  CHECK(j["accel"] == 3);
  CHECK(j["regions"].size() == 3);
  CHECK(r.report.to_text().find("mac_engine:dense [fc]") != std::string::npos);
  CHECK_THROWS_WITH_AS(builtin_accelerator("nope"), doctest::Contains("mac_engine"), RegistryError);
}
