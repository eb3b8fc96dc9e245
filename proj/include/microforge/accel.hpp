// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "microforge/error.hpp"
#include "microforge/hir.hpp"
#include "microforge/tir.hpp"

namespace microforge {

class RegistryError : public Error {
 public:
  explicit RegistryError(const std::string& message) : Error(Stage::Partition, message) {}
};

/// A chain of op kinds linked by single-consumer edges, e.g. [Dense] or
/// [Dense, Softmax]. Each op after the first consumes its predecessor exactly
/// once, and the predecessor is neither a graph output nor used elsewhere.
struct Pattern {
  std::string name;
  std::vector<OpKind> chain;
  int priority = 0;
  /// Optional extra filter applied to every op of a candidate match.
  std::function<bool(const HirOp&, const HirModule&)> predicate;
};

struct MatchedRegion {
  std::string accel;
  std::string pattern;
  std::vector<std::string> ops;  // chain order

  friend bool operator==(const MatchedRegion&, const MatchedRegion&) = default;
};

struct GraphPass {
  std::string name;
  std::function<HirModule(const HirModule&, const MatchedRegion&)> run;
};

using SymbolScheme = std::function<std::string(std::string_view accel, std::string_view pattern)>;

/// `<accel>_<pattern>`.
std::string default_symbol(std::string_view accel, std::string_view pattern);

struct AcceleratorDesc {
  std::string name;
  std::vector<Pattern> patterns;
  std::vector<GraphPass> graph_passes;
  std::vector<tir::TirPass> tir_passes;
  SymbolScheme symbol_scheme = default_symbol;

  const Pattern* find_pattern(std::string_view pattern) const;
  std::string symbol(std::string_view pattern) const;
};

/// Accelerators in registration order. Immutable; registration returns a copy.
class AccelRegistry {
 public:
  const std::vector<AcceleratorDesc>& accelerators() const { return accels_; }
  const AcceleratorDesc* find(std::string_view name) const;
  bool empty() const { return accels_.empty(); }

  AccelRegistry with(AcceleratorDesc desc) const;

 private:
  std::vector<AcceleratorDesc> accels_;
};

/// Throws RegistryError for a duplicate accelerator name, a name that is not
/// a C identifier stem, duplicate pattern names or empty pattern chains.
AccelRegistry register_accelerator(const AccelRegistry& registry, AcceleratorDesc desc);

struct PartitionReport {
  std::map<std::string, std::string> assignment;  // op id -> "cpu" or accelerator name
  std::map<std::string, int> counts;              // "cpu" and every registered accelerator
  std::vector<MatchedRegion> regions;

  int cpu_count() const;
  int accel_count() const;
  std::string to_text() const;
  nlohmann::json to_json() const;
};

struct PartitionResult {
  HirModule module;
  PartitionReport report;
};

/// Greedy non-overlapping matching. Patterns are tried by descending
/// priority (registration order breaks ties); each scans ops in schedule
/// order. Only target annotations change, then each accelerator's graph
/// passes run on its own regions.
PartitionResult partition(const HirModule& m, const AccelRegistry& registry);

/// Operands handed to an extern kernel: the first op's operands, then every
/// operand of later ops except the chained predecessor.
std::vector<ValueRef> extern_operands(const HirModule& m, const MatchedRegion& region);

/// Number of `const float*` operands for a pattern; independent of instance.
std::size_t extern_operand_count(const Pattern& pattern);

/// `int32_t <symbol>(const float*, ..., float*, const int32_t*)`.
std::string extern_signature(const AcceleratorDesc& desc, const Pattern& pattern);

/// Runtime dims per op in chain order, concatenated:
///   Dense          {in, out, rows}
///   Conv1dDwShared {channels, in_len, kernel_len, stride, out_len}
///   Gru            {in_channels, steps, hidden}
///   Softmax        {rows, cols}
///   LastTimestep   {channels, steps}
///   others         {count}
std::vector<int32_t> extern_dims(const HirModule& m, const MatchedRegion& region);

/// Example MAC engine offloading Dense ("dense") and Conv1dDwShared
/// ("conv1d") with identity passes.
AcceleratorDesc mac_engine();

std::vector<std::string> builtin_accelerator_names();
/// Throws RegistryError listing the available names.
AcceleratorDesc builtin_accelerator(std::string_view name);

}  // namespace microforge
