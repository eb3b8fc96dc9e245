// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/planner.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace microforge {

Liveness liveness(const std::vector<StepUse>& steps, const std::vector<std::string>& graph_inputs,
                  const std::vector<std::string>& graph_outputs) {
  Liveness live;
  const int last_step = std::max(0, static_cast<int>(steps.size()) - 1);
  for (const auto& in : graph_inputs) live[in] = {0, 0};
  for (int s = 0; s < static_cast<int>(steps.size()); ++s)
    for (const auto& d : steps[static_cast<std::size_t>(s)].defs) live[d] = {s, s};
  for (int s = 0; s < static_cast<int>(steps.size()); ++s)
    for (const auto& u : steps[static_cast<std::size_t>(s)].uses) {
      auto it = live.find(u);
      if (it != live.end()) it->second.last = std::max(it->second.last, s);
    }
  for (const auto& out : graph_outputs) {
    auto it = live.find(out);
    if (it != live.end()) it->second.last = last_step;
  }
  return live;
}

Liveness liveness(const std::vector<std::string>& schedule, const HirModule& m) {
  std::vector<StepUse> steps;
  for (const auto& id : schedule) {
    const HirOp* op = m.find_op(id);
    if (!op) throw std::invalid_argument("schedule names unknown op '" + id + "'");
    steps.push_back({{id}, op->inputs});
  }
  std::vector<std::string> inputs;
  for (const auto& in : m.inputs) inputs.push_back(in.name);
  return liveness(steps, inputs, m.outputs);
}

int64_t align_up(int64_t bytes, int64_t alignment) { return (bytes + alignment - 1) / alignment * alignment; }

MemoryPlan plan(const Liveness& live, const std::map<std::string, int64_t>& sizes) {
  struct Item {
    std::string name;
    int64_t size;
    LiveInterval interval;
  };
  std::vector<Item> items;
  for (const auto& [name, size] : sizes) {
    if (size <= 0) throw std::invalid_argument("buffer '" + name + "' has non-positive size");
    auto it = live.find(name);
    if (it == live.end()) throw std::invalid_argument("buffer '" + name + "' has no live interval");
    items.push_back({name, align_up(size), it->second});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.size != b.size) return a.size > b.size;
    return a.name < b.name;
  });

  MemoryPlan p;
  p.sizes = sizes;
  std::vector<const Item*> placed;
  for (const auto& item : items) {
    std::vector<std::pair<int64_t, int64_t>> busy;  // [begin, end) of live-overlapping buffers
    for (const Item* other : placed)
      if (other->interval.overlaps(item.interval)) {
        const int64_t off = p.offsets.at(other->name);
        busy.emplace_back(off, off + other->size);
      }
    std::sort(busy.begin(), busy.end());
    int64_t offset = 0;
    for (const auto& [begin, end] : busy) {
      if (offset + item.size <= begin) break;
      offset = std::max(offset, end);
    }
    p.offsets[item.name] = offset;
    p.arena_bytes = std::max(p.arena_bytes, offset + item.size);
    placed.push_back(&item);
  }
  return p;
}

std::vector<std::pair<std::string, std::string>> find_conflicts(const MemoryPlan& p, const Liveness& live) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto a = p.offsets.begin(); a != p.offsets.end(); ++a)
    for (auto b = std::next(a); b != p.offsets.end(); ++b) {
      if (!live.at(a->first).overlaps(live.at(b->first))) continue;
      const int64_t a_end = a->second + p.sizes.at(a->first);
      const int64_t b_end = b->second + p.sizes.at(b->first);
      if (a->second < b_end && b->second < a_end) out.emplace_back(a->first, b->first);
    }
  return out;
}

nlohmann::json MemoryPlan::to_json(const Liveness& live) const {
  nlohmann::json j;
  j["arena_bytes"] = arena_bytes;
  j["alignment"] = alignment;
  j["buffers"] = nlohmann::json::array();
  for (const auto& [name, offset] : offsets) {
    nlohmann::json b{{"name", name}, {"offset", offset}, {"bytes", sizes.at(name)}};
    if (auto it = live.find(name); it != live.end()) b["live"] = {it->second.first, it->second.last};
    j["buffers"].push_back(std::move(b));
  }
  return j;
}

}  // namespace microforge
