// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "microforge/accel.hpp"
#include "microforge/hir.hpp"
#include "microforge/interp.hpp"

namespace mftest {

using Rng = std::mt19937_64;

float uniform(Rng& rng, float lo, float hi);
int64_t pick(Rng& rng, int64_t lo, int64_t hi);  // inclusive
std::vector<float> random_data(Rng& rng, int64_t n, float lo = -1.0f, float hi = 1.0f);

/// Random op instance with valid operand shapes for `kind`.
struct OpInstance {
  microforge::OpAttrs attrs;
  std::vector<microforge::TensorValue> operands;
};
OpInstance random_instance(microforge::OpKind kind, Rng& rng);

/// Random shape-inferred module over the whole op vocabulary: one or two
/// inputs, 2..max_ops compute ops, every sink is an output.
microforge::HirModule random_module(Rng& rng, int max_ops = 10);
microforge::TensorMap random_inputs(const microforge::HirModule& m, Rng& rng);

/// 1..3 accelerators with random single-op and chain patterns.
microforge::AccelRegistry random_registry(Rng& rng);

/// Naive reference semantics in double precision, written from the op
/// definitions without sharing code with the interpreter.
namespace brute {
std::vector<double> run(microforge::OpKind kind, const microforge::OpAttrs& attrs,
                        const std::vector<microforge::TensorValue>& operands);
}

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

/// Every regular file under `dir` keyed by relative path.
std::vector<std::pair<std::string, std::string>> read_tree(const std::filesystem::path& dir);

}  // namespace mftest
