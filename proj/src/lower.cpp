// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/lower.hpp"

#include <map>
#include <sstream>

namespace microforge {

std::size_t LoweredModule::extern_call_count() const {
  std::size_t n = 0;
  for (const auto& c : calls) n += std::holds_alternative<ExternCall>(c) ? 1 : 0;
  return n;
}

LoweredModule lower_module(const HirModule& m, const std::vector<std::string>& schedule,
                           const AccelRegistry& registry) {
  LoweredModule out;

  // Region ops in schedule order; chains are paths, so this is chain order.
  std::map<int, std::vector<const HirOp*>> regions;
  for (const auto& id : schedule) {
    const HirOp* op = m.find_op(id);
    if (!op) throw tir::LoweringError("schedule names unknown op '" + id + "'");
    if (!op->target.is_cpu()) regions[op->target.region].push_back(op);
  }

  for (const auto& id : schedule) {
    const HirOp* op = m.find_op(id);
    if (op->target.is_cpu()) {
      tir::TirFunc f = tir::lower_op(m, *op);
      f.name = "op" + std::to_string(out.funcs.size()) + "_" + f.name;
      FuncCall call{out.funcs.size(), op->inputs};
      call.args.push_back(op->id);
      out.funcs.push_back(std::move(f));
      out.calls.emplace_back(std::move(call));
      continue;
    }

    const auto& members = regions.at(op->target.region);
    if (members.back() != op) continue;  // issued with the region's last op

    const AcceleratorDesc* desc = registry.find(op->target.accel);
    if (!desc) throw tir::LoweringError("op '" + id + "' targets unregistered accelerator '" + op->target.accel + "'");
    const Pattern* pattern = desc->find_pattern(op->target.pattern);
    if (!pattern)
      throw tir::LoweringError("accelerator '" + desc->name + "' has no pattern '" + op->target.pattern + "'");

    MatchedRegion region{desc->name, pattern->name, {}};
    for (const HirOp* member : members) region.ops.push_back(member->id);

    ExternCall call;
    call.accel = desc->name;
    call.pattern = pattern->name;
    call.symbol = desc->symbol(pattern->name);
    call.signature = extern_signature(*desc, *pattern);
    call.region = op->target.region;
    call.ops = region.ops;
    call.operands = extern_operands(m, region);
    call.output = op->id;
    call.dims = extern_dims(m, region);
    for (const HirOp* member : members)
      call.prime_funcs.push_back(tir::run_tir_passes(tir::lower_op_any_target(m, *member), desc->tir_passes));
    out.calls.emplace_back(std::move(call));
  }
  return out;
}

std::vector<CallUse> call_uses(const LoweredModule& lowered) {
  std::vector<CallUse> uses;
  for (const auto& c : lowered.calls) {
    if (const auto* f = std::get_if<FuncCall>(&c)) {
      CallUse u;
      u.uses.assign(f->args.begin(), f->args.end() - 1);
      u.defs.push_back(f->args.back());
      uses.push_back(std::move(u));
    } else {
      const auto& e = std::get<ExternCall>(c);
      uses.push_back({{e.output}, e.operands});
    }
  }
  return uses;
}

std::string dump(const LoweredModule& lowered) {
  std::ostringstream os;
  for (const auto& c : lowered.calls) {
    if (const auto* f = std::get_if<FuncCall>(&c)) {
      os << tir::dump(lowered.funcs[f->func]);
      os << "call " << lowered.funcs[f->func].name << "(";
      for (std::size_t i = 0; i < f->args.size(); ++i) os << (i ? ", " : "") << f->args[i];
      os << ")\n\n";
    } else {
      const auto& e = std::get<ExternCall>(c);
      os << "extern " << e.signature << "  // region " << e.region << "\n";
      for (const auto& pf : e.prime_funcs) os << tir::dump(pf);
      os << "call " << e.symbol << "(";
      for (const auto& v : e.operands) os << v << ", ";
      os << e.output << ", dims={";
      for (std::size_t i = 0; i < e.dims.size(); ++i) os << (i ? ", " : "") << e.dims[i];
      os << "})\n\n";
    }
  }
  return os.str();
}

}  // namespace microforge
