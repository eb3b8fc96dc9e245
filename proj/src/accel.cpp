// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/accel.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace microforge {

std::string default_symbol(std::string_view accel, std::string_view pattern) {
  return std::string(accel) + "_" + std::string(pattern);
}

const Pattern* AcceleratorDesc::find_pattern(std::string_view pattern) const {
  for (const auto& p : patterns)
    if (p.name == pattern) return &p;
  return nullptr;
}

std::string AcceleratorDesc::symbol(std::string_view pattern) const {
  return (symbol_scheme ? symbol_scheme : default_symbol)(name, pattern);
}

const AcceleratorDesc* AccelRegistry::find(std::string_view name) const {
  for (const auto& a : accels_)
    if (a.name == name) return &a;
  return nullptr;
}

AccelRegistry AccelRegistry::with(AcceleratorDesc desc) const {
  AccelRegistry copy = *this;
  copy.accels_.push_back(std::move(desc));
  return copy;
}

namespace {

bool is_c_stem(std::string_view s) {
  if (s.empty() || (s[0] >= '0' && s[0] <= '9')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

}  // namespace

AccelRegistry register_accelerator(const AccelRegistry& registry, AcceleratorDesc desc) {
  if (!is_c_stem(desc.name))
    throw RegistryError("accelerator name '" + desc.name + "' is not a valid C identifier stem");
  if (registry.find(desc.name)) throw RegistryError("accelerator '" + desc.name + "' is already registered");
  std::set<std::string> names;
  for (const auto& p : desc.patterns) {
    if (!is_c_stem(p.name))
      throw RegistryError("pattern name '" + p.name + "' of '" + desc.name + "' is not a valid C identifier stem");
    if (!names.insert(p.name).second)
      throw RegistryError("pattern '" + p.name + "' is registered twice on '" + desc.name + "'");
    if (p.chain.empty()) throw RegistryError("pattern '" + p.name + "' of '" + desc.name + "' has an empty chain");
    for (OpKind k : p.chain)
      if (k == OpKind::Input || k == OpKind::Const)
        throw RegistryError("pattern '" + p.name + "' may only contain compute kinds");
  }
  return registry.with(std::move(desc));
}

// ---------------------------------------------------------------------------
// Partitioning

namespace {

std::vector<std::string> match_chain(const HirModule& m, const HirOp& start, const Pattern& p,
                                     const std::set<std::string>& claimed) {
  auto accepts = [&](const HirOp& op, OpKind kind) {
    return op.kind == kind && !claimed.count(op.id) && (!p.predicate || p.predicate(op, m));
  };
  if (!accepts(start, p.chain[0])) return {};
  std::vector<std::string> ops{start.id};
  const HirOp* cur = &start;
  for (std::size_t i = 1; i < p.chain.size(); ++i) {
    if (m.is_output(cur->id)) return {};
    auto users = m.consumers(cur->id);
    if (users.size() != 1) return {};
    const HirOp* next = users.front();
    if (std::count(next->inputs.begin(), next->inputs.end(), cur->id) != 1) return {};
    if (!accepts(*next, p.chain[i])) return {};
    ops.push_back(next->id);
    cur = next;
  }
  return ops;
}

struct Candidate {
  int priority;
  std::size_t accel;
  std::size_t pattern;
};

}  // namespace

PartitionResult partition(const HirModule& m, const AccelRegistry& registry) {
  PartitionResult result{m, {}};
  HirModule& out = result.module;
  for (auto& op : out.ops) op.target = Target::cpu();

  std::vector<Candidate> candidates;
  const auto& accels = registry.accelerators();
  for (std::size_t a = 0; a < accels.size(); ++a)
    for (std::size_t p = 0; p < accels[a].patterns.size(); ++p)
      candidates.push_back({accels[a].patterns[p].priority, a, p});
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) { return x.priority > y.priority; });

  const auto schedule = topo_schedule(out);
  std::set<std::string> claimed;
  auto& regions = result.report.regions;
  for (const auto& c : candidates) {
    const AcceleratorDesc& desc = accels[c.accel];
    const Pattern& pattern = desc.patterns[c.pattern];
    for (const auto& id : schedule) {
      auto ops = match_chain(out, *out.find_op(id), pattern, claimed);
      if (ops.empty()) continue;
      const int region = static_cast<int>(regions.size());
      for (const auto& op_id : ops) {
        claimed.insert(op_id);
        out.find_op(op_id)->target = Target{desc.name, pattern.name, region};
      }
      regions.push_back({desc.name, pattern.name, std::move(ops)});
    }
  }

  for (const auto& desc : accels) {
    for (const auto& region : regions) {
      if (region.accel != desc.name) continue;
      for (const auto& pass : desc.graph_passes) {
        out = pass.run(out, region);
        if (auto errs = validate(out); !errs.empty())
          throw Error(Stage::Partition, "graph pass '" + pass.name + "' produced an invalid module: " +
                                            errs.front().message);
      }
    }
  }

  auto& report = result.report;
  report.counts["cpu"] = 0;
  for (const auto& desc : accels) report.counts[desc.name] = 0;
  for (const auto& op : out.ops) {
    const std::string where = op.target.is_cpu() ? "cpu" : op.target.accel;
    report.assignment[op.id] = where;
    ++report.counts[where];
  }
  return result;
}

int PartitionReport::cpu_count() const {
  auto it = counts.find("cpu");
  return it == counts.end() ? 0 : it->second;
}

int PartitionReport::accel_count() const {
  int n = 0;
  for (const auto& [k, v] : counts)
    if (k != "cpu") n += v;
  return n;
}

std::string PartitionReport::to_text() const {
  std::ostringstream os;
  os << "cpu: " << cpu_count() << ", accel: " << accel_count() << "\n";
  for (const auto& [k, v] : counts)
    if (k != "cpu") os << "  " << k << ": " << v << "\n";
  for (std::size_t i = 0; i < regions.size(); ++i) {
    os << "region " << i << " " << regions[i].accel << ":" << regions[i].pattern << " [";
    for (std::size_t j = 0; j < regions[i].ops.size(); ++j) os << (j ? ", " : "") << regions[i].ops[j];
    os << "]\n";
  }
  return os.str();
}

nlohmann::json PartitionReport::to_json() const {
  nlohmann::json j;
  j["assignment"] = assignment;
  j["counts"] = counts;
  j["cpu"] = cpu_count();
  j["accel"] = accel_count();
  j["regions"] = nlohmann::json::array();
  for (const auto& r : regions) j["regions"].push_back({{"accel", r.accel}, {"pattern", r.pattern}, {"ops", r.ops}});
  return j;
}

// ---------------------------------------------------------------------------
// Extern interface

std::vector<ValueRef> extern_operands(const HirModule& m, const MatchedRegion& region) {
  std::vector<ValueRef> out;
  for (std::size_t i = 0; i < region.ops.size(); ++i) {
    const HirOp* op = m.find_op(region.ops[i]);
    bool skipped = false;
    for (const auto& ref : op->inputs) {
      if (i > 0 && !skipped && ref == region.ops[i - 1]) {
        skipped = true;
        continue;
      }
      out.push_back(ref);
    }
  }
  return out;
}

std::size_t extern_operand_count(const Pattern& pattern) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < pattern.chain.size(); ++i) n += operand_count(pattern.chain[i]) - (i > 0 ? 1 : 0);
  return n;
}

std::string extern_signature(const AcceleratorDesc& desc, const Pattern& pattern) {
  std::string s = "int32_t " + desc.symbol(pattern.name) + "(";
  for (std::size_t i = 0; i < extern_operand_count(pattern); ++i) s += "const float*, ";
  return s + "float*, const int32_t*)";
}

std::vector<int32_t> extern_dims(const HirModule& m, const MatchedRegion& region) {
  std::vector<int32_t> dims;
  auto push = [&](int64_t v) { dims.push_back(static_cast<int32_t>(v)); };
  for (const auto& id : region.ops) {
    const HirOp* op = m.find_op(id);
    const Shape x = m.shape_of(op->inputs.front()).value_or(Shape{});
    const Shape y = op->out_shape.value_or(Shape{});
    switch (op->kind) {
      case OpKind::Dense:
        push(x.back());
        push(op->attrs.units);
        push(element_count(x) / x.back());
        break;
      case OpKind::Conv1dDwShared:
        push(x[1]);
        push(x[2]);
        push(op->attrs.kernel_len);
        push(op->attrs.stride);
        push(y[2]);
        break;
      case OpKind::Gru:
        push(x[1]);
        push(x[2]);
        push(op->attrs.hidden);
        break;
      case OpKind::Softmax:
        push(element_count(x) / x.back());
        push(x.back());
        break;
      case OpKind::LastTimestep:
        push(x[1]);
        push(x[2]);
        break;
      default: push(element_count(y)); break;
    }
  }
  return dims;
}

// ---------------------------------------------------------------------------
// Built-in accelerators

AcceleratorDesc mac_engine() {
  AcceleratorDesc d;
  d.name = "mac_engine";
  d.patterns = {{"dense", {OpKind::Dense}, 0, nullptr}, {"conv1d", {OpKind::Conv1dDwShared}, 0, nullptr}};
  d.graph_passes = {{"mac_engine.configure", [](const HirModule& m, const MatchedRegion&) { return m; }}};
  d.tir_passes = {{"mac_engine.layout", [](const tir::TirFunc& f) { return f; }}};
  return d;
}

std::vector<std::string> builtin_accelerator_names() { return {"mac_engine"}; }

AcceleratorDesc builtin_accelerator(std::string_view name) {
  if (name == "mac_engine") return mac_engine();
  std::string known;
  for (const auto& n : builtin_accelerator_names()) known += (known.empty() ? "" : ", ") + n;
  throw RegistryError("unknown accelerator '" + std::string(name) + "' (available: " + known + ")");
}

}  // namespace microforge
