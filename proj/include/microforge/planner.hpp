// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "microforge/hir.hpp"

namespace microforge {

/// Inclusive range of schedule steps during which a value must stay intact.
struct LiveInterval {
  int first = 0;
  int last = 0;

  bool overlaps(const LiveInterval& o) const { return first <= o.last && o.first <= last; }
  friend bool operator==(const LiveInterval&, const LiveInterval&) = default;
};

using Liveness = std::map<std::string, LiveInterval>;

struct StepUse {
  std::vector<std::string> defs;
  std::vector<std::string> uses;
};

/// Graph inputs are live from step 0 and graph outputs until the last step.
/// Names that are never defined by a step and are not graph inputs (the
/// parameters) get no interval.
Liveness liveness(const std::vector<StepUse>& steps, const std::vector<std::string>& graph_inputs,
                  const std::vector<std::string>& graph_outputs);

/// Convenience overload: one step per op of `schedule`, constants excluded.
Liveness liveness(const std::vector<std::string>& schedule, const HirModule& m);

inline constexpr int64_t kArenaAlignment = 8;

int64_t align_up(int64_t bytes, int64_t alignment = kArenaAlignment);

struct MemoryPlan {
  int64_t arena_bytes = 0;
  int64_t alignment = kArenaAlignment;
  std::map<std::string, int64_t> offsets;
  std::map<std::string, int64_t> sizes;  // requested byte sizes

  nlohmann::json to_json(const Liveness& live) const;
};

/// First-fit by decreasing aligned size (ties by name). Every buffer in
/// `sizes` must have an interval in `live`; sizes must be positive.
MemoryPlan plan(const Liveness& live, const std::map<std::string, int64_t>& sizes);

/// Pairs of buffers whose intervals overlap and whose byte ranges intersect.
std::vector<std::pair<std::string, std::string>> find_conflicts(const MemoryPlan& p, const Liveness& live);

}  // namespace microforge
