// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/emit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace microforge {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Templates

namespace {

bool is_key_char(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'; }

/// Calls `on_key(begin, end, key)` for every placeholder in `body`.
template <typename F>
void scan_placeholders(const std::string& tpl_name, const std::string& body, F&& on_key) {
  std::size_t pos = 0;
  while ((pos = body.find("${", pos)) != std::string::npos) {
    const std::size_t close = body.find('}', pos + 2);
    if (close == std::string::npos)
      throw TemplateError("", "template '" + tpl_name + "': unterminated placeholder at offset " + std::to_string(pos));
    std::string key = body.substr(pos + 2, close - pos - 2);
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_key_char))
      throw TemplateError(key, "template '" + tpl_name + "': invalid placeholder '${" + key + "}'");
    on_key(pos, close + 1, key);
    pos = close + 1;
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("", "cannot read template file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Template::Template(std::string name, std::string body) : name_(std::move(name)), body_(std::move(body)) {
  scan_placeholders(name_, body_, [&](std::size_t, std::size_t, const std::string& key) { keys_.insert(key); });
}

std::string Template::render(const Substitutions& subs) const {
  for (const auto& key : keys_)
    if (!subs.count(key)) throw TemplateError(key, "template '" + name_ + "': unbound key '" + key + "'");
  for (const auto& [key, value] : subs)
    if (!keys_.count(key)) throw TemplateError(key, "template '" + name_ + "': unknown key '" + key + "'");

  std::string out;
  std::size_t last = 0;
  scan_placeholders(name_, body_, [&](std::size_t begin, std::size_t end, const std::string& key) {
    out.append(body_, last, begin - last);
    out += subs.at(key);
    last = end;
  });
  out.append(body_, last, std::string::npos);
  return out;
}

TemplateSet TemplateSet::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw TemplateError("", "template directory '" + dir.string() + "' does not exist");
  TemplateSet set;
  set.main_.emplace("main.c.tpl", read_text(dir / "main.c.tpl"));
  set.make_sh_.emplace("make.sh.tpl", read_text(dir / "make.sh.tpl"));

  nlohmann::json profiles;
  try {
    profiles = nlohmann::json::parse(read_text(dir / "profiles.json"));
  } catch (const nlohmann::json::exception& e) {
    throw TemplateError("", "profiles.json: " + std::string(e.what()));
  }
  if (!profiles.is_object()) throw TemplateError("", "profiles.json: expected an object of profiles");
  for (const auto& [name, body] : profiles.items()) {
    TargetProfile p;
    p.name = name;
    if (!body.is_object() || !body.contains("vars") || !body["vars"].is_object())
      throw TemplateError("", "profiles.json: profile '" + name + "' needs a 'vars' object");
    p.description = body.value("description", "");
    for (const auto& [key, value] : body["vars"].items()) {
      if (!value.is_string()) throw TemplateError(key, "profiles.json: '" + name + "." + key + "' must be a string");
      p.vars[key] = value.get<std::string>();
    }
    const std::string file = "makefile_lib." + name;
    set.makefiles_.emplace(name, Template(file, read_text(dir / file)));
    set.profiles_.emplace(name, std::move(p));
  }

  for (const char* name : {"tvm_crt.h", "mock_accel.c"}) {
    const fs::path path = dir / "crt" / name;
    if (fs::is_regular_file(path)) set.accel_support_.push_back({name, read_text(path)});
  }
  return set;
}

std::vector<std::string> TemplateSet::profile_names() const {
  std::vector<std::string> names;
  for (const auto& [name, p] : profiles_) names.push_back(name);
  return names;
}

const TargetProfile& TemplateSet::profile(const std::string& name) const {
  auto it = profiles_.find(name);
  if (it == profiles_.end()) {
    std::string available;
    for (const auto& n : profile_names()) available += (available.empty() ? "" : ", ") + n;
    throw TemplateError("", "unknown target '" + name + "' (available: " + available + ")");
  }
  return it->second;
}

const Template& TemplateSet::makefile(const std::string& profile_name) const {
  profile(profile_name);
  return makefiles_.at(profile_name);
}

fs::path builtin_template_dir() {
  if (const char* env = std::getenv("MICROFORGE_TEMPLATES"); env && *env) return env;
#ifdef MICROFORGE_TEMPLATE_DIR
  return MICROFORGE_TEMPLATE_DIR;
#else
  return "templates";
#endif
}

// ---------------------------------------------------------------------------
// C text helpers

std::string c_float_literal(float v) {
  if (std::isnan(v)) return "NAN";
  if (std::isinf(v)) return v > 0 ? "INFINITY" : "(-INFINITY)";
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s + "f";
}

std::string c_macro_name(std::string_view text) {
  std::string id = tir::c_identifier(text);
  for (char& c : id) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return id;
}

namespace {

std::string comment_safe(std::string text) {
  for (std::size_t p; (p = text.find("*/")) != std::string::npos;) text.replace(p, 2, "* /");
  return text;
}

/// Sanitized identifiers, made unique by appending the position on collision.
std::vector<std::string> unique_idents(const std::vector<std::string>& names, std::string (*sanitize)(std::string_view)) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::string id = sanitize(names[i]);
    if (seen.count(id)) id += "_" + std::to_string(i);
    seen.insert(id);
    out.push_back(std::move(id));
  }
  return out;
}

std::string lower_ident(std::string_view text) {
  std::string id = tir::c_identifier(text);
  for (char& c : id) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return id;
}

std::string index_to_c(const tir::AffineIndex& idx) {
  std::string out;
  for (const auto& [var, coeff] : idx.terms) {
    if (coeff == 0) continue;
    std::string term = coeff == 1 || coeff == -1 ? var : var + " * " + std::to_string(coeff < 0 ? -coeff : coeff);
    if (out.empty())
      out = coeff < 0 ? "-" + term : term;
    else
      out += (coeff < 0 ? " - " : " + ") + term;
  }
  if (out.empty()) return std::to_string(idx.offset);
  if (idx.offset > 0) out += " + " + std::to_string(idx.offset);
  if (idx.offset < 0) out += " - " + std::to_string(-idx.offset);
  return out;
}

std::string expr_to_c(const tir::Expr& e, bool nested) {
  using namespace tir;
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return c_float_literal(n.value);
        } else if constexpr (std::is_same_v<T, Load>) {
          return n.buffer + "[" + index_to_c(n.index) + "]";
        } else if constexpr (std::is_same_v<T, Binary>) {
          if (n.op == BinaryOp::Max) return "fmaxf(" + expr_to_c(*n.lhs, false) + ", " + expr_to_c(*n.rhs, false) + ")";
          const char* sym = n.op == BinaryOp::Add ? " + " : n.op == BinaryOp::Sub ? " - " : n.op == BinaryOp::Mul ? " * " : " / ";
          std::string s = expr_to_c(*n.lhs, true) + sym + expr_to_c(*n.rhs, true);
          return nested ? "(" + s + ")" : s;
        } else {
          return std::string(n.op == UnaryOp::Exp ? "expf(" : "tanhf(") + expr_to_c(*n.arg, false) + ")";
        }
      },
      e.node);
}

void collect_expr_names(const tir::Expr& e, std::set<std::string>& names) {
  using namespace tir;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Load>) {
          names.insert(n.buffer);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_expr_names(*n.lhs, names);
          collect_expr_names(*n.rhs, names);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect_expr_names(*n.arg, names);
        }
      },
      e.node);
}

void collect_names(const std::vector<tir::Stmt>& body, std::set<std::string>& names) {
  for (const auto& s : body) {
    if (const auto* loop = std::get_if<tir::ForLoop>(&s.node)) {
      collect_names(loop->body, names);
    } else {
      const auto& a = std::get<tir::Assign>(s.node);
      names.insert(a.buffer);
      collect_expr_names(*a.value, names);
    }
  }
}

void emit_stmts(std::ostringstream& os, const std::vector<tir::Stmt>& body, int depth) {
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& s : body) {
    if (const auto* loop = std::get_if<tir::ForLoop>(&s.node)) {
      os << indent << "for (int32_t " << loop->var << " = 0; " << loop->var << " < " << loop->extent << "; ++"
         << loop->var << ") {\n";
      emit_stmts(os, loop->body, depth + 1);
      os << indent << "}\n";
    } else {
      const auto& a = std::get<tir::Assign>(s.node);
      os << indent << a.buffer << "[" << index_to_c(a.index) << "] = " << expr_to_c(*a.value, false) << ";\n";
    }
  }
}

std::string float_array_body(const std::vector<float>& data, const std::string& indent) {
  std::string out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i % 8 == 0) out += indent;
    out += c_float_literal(data[i]);
    if (i + 1 < data.size()) out += (i % 8 == 7) ? ",\n" : ", ";
  }
  return out + "\n";
}

bool any_non_finite(const std::vector<float>& data) {
  return std::any_of(data.begin(), data.end(), [](float v) { return !std::isfinite(v); });
}

}  // namespace

std::string emit_c_func(const tir::TirFunc& f) {
  std::ostringstream os;
  os << "static void " << f.name << "(";
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    const auto& p = f.params[i];
    os << (i ? ", " : "") << (f.writes(p.name) ? "float* " : "const float* ") << p.name;
  }
  if (f.params.empty()) os << "void";
  os << ") {\n";

  std::set<std::string> used;
  collect_names(f.body, used);
  for (const auto& p : f.params)
    if (!used.count(p.name)) os << "  (void)" << p.name << ";\n";
  for (const auto& l : f.locals)
    if (used.count(l.name)) os << "  float " << l.name << "[" << std::max<int64_t>(1, l.size()) << "];\n";
  emit_stmts(os, f.body, 1);
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// io.h

std::string prepare_io(const IoManifest& manifest) {
  std::ostringstream os;
  os << "/* Sample vectors for the generated test harness. */\n"
     << "#ifndef MICROFORGE_IO_H_\n#define MICROFORGE_IO_H_\n\n";

  bool non_finite = false;
  for (const auto* list : {&manifest.inputs, &manifest.expected_outputs})
    for (const auto& e : *list) non_finite = non_finite || any_non_finite(e.data);
  if (non_finite) os << "#include <math.h>\n\n";

  os << "#define IO_HAS_INPUT " << (manifest.inputs.empty() ? 0 : 1) << "\n";
  os << "#define IO_HAS_EXPECTED " << (manifest.has_expected() ? 1 : 0) << "\n";

  auto section = [&](const std::vector<IoEntry>& entries, const std::string& array_prefix,
                     const std::string& macro_prefix) {
    std::vector<std::string> names;
    for (const auto& e : entries) names.push_back(e.name);
    const auto arrays = unique_idents(names, lower_ident);
    const auto macros = unique_idents(names, [](std::string_view t) { return c_macro_name(t); });
    int64_t total = 0;
    std::string each;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const std::string count = "IO_" + macro_prefix + "_" + macros[i] + "_COUNT";
      const std::string array = array_prefix + "_" + arrays[i];
      const auto n = static_cast<int64_t>(e.data.size());
      total += n;
      os << "\n/* " << comment_safe(e.name) << " " << shape_to_string(e.shape) << " */\n";
      os << "#define " << count << " " << n << "\n";
      os << "static const float " << array << "[" << std::max<int64_t>(1, n) << "] = {\n"
         << (n ? float_array_body(e.data, "  ") : "  0.0f\n") << "};\n";
      each += " X(" + array + ", " + count + ")";
    }
    os << "\n#define IO_" << macro_prefix << "_TOTAL " << total << "\n";
    os << "#define IO_FOR_EACH_" << macro_prefix << "(X)" << each << "\n";
  };
  section(manifest.inputs, "input", "INPUT");
  section(manifest.expected_outputs, "expected", "EXPECTED");

  os << "\n#endif /* MICROFORGE_IO_H_ */\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Scaffolding

std::string gen_main(const Template& tpl, const Substitutions& subs) { return tpl.render(subs); }

std::string gen_make(const Template& tpl, const TargetProfile& profile, const Substitutions& extra) {
  Substitutions subs = profile.vars;
  for (const auto& [k, v] : extra) subs[k] = v;
  return tpl.render(subs);
}

std::string gen_make_sh(const Template& tpl, const std::string& model_name,
                        const std::vector<std::string>& support_files) {
  std::string install;
  for (const auto& file : support_files) {
    const bool header = file.size() > 2 && file.substr(file.size() - 2) == ".h";
    install += "cp " + file + (header ? " tvm_model/include/" : " tvm_model/source/") + "\n";
  }
  if (install.empty()) install = ": no support files to install\n";
  install.pop_back();
  return tpl.render({{"MODEL_NAME", model_name}, {"INSTALL_COMMANDS", install}});
}

// ---------------------------------------------------------------------------
// Model

PlannedMemory plan_memory(const HirModule& m, const LoweredModule& lowered) {
  std::vector<StepUse> steps;
  for (const auto& u : call_uses(lowered)) steps.push_back({u.defs, u.uses});
  std::vector<std::string> inputs;
  for (const auto& in : m.inputs) inputs.push_back(in.name);

  PlannedMemory out;
  out.live = liveness(steps, inputs, m.outputs);
  std::map<std::string, int64_t> sizes;
  for (const auto& s : steps)
    for (const auto& d : s.defs) {
      if (m.is_output(d)) continue;
      const auto shape = m.shape_of(d);
      if (!shape) throw EmitError("value '" + d + "' has no inferred shape");
      sizes[d] = 4 * element_count(*shape);
    }
  out.plan = plan(out.live, sizes);
  return out;
}

namespace {

struct IoLayout {
  std::vector<std::string> macros;
  std::vector<int64_t> offsets;
  std::vector<int64_t> counts;
  int64_t total = 0;
};

IoLayout io_layout(const HirModule& m, const std::vector<std::string>& names) {
  IoLayout l;
  l.macros = unique_idents(names, [](std::string_view t) { return c_macro_name(t); });
  for (const auto& n : names) {
    const auto shape = m.shape_of(n);
    if (!shape) throw EmitError("value '" + n + "' has no inferred shape");
    l.offsets.push_back(l.total);
    l.counts.push_back(element_count(*shape));
    l.total += l.counts.back();
  }
  return l;
}

std::string model_ident(const HirModule& m) {
  std::string id = lower_ident(m.name.empty() ? "model" : m.name);
  return id;
}

}  // namespace

std::map<std::string, std::string> emit_library(const HirModule& m, const LoweredModule& lowered,
                                                 const MemoryPlan& plan) {
  const std::string name = model_ident(m);
  const std::string macro = c_macro_name(name);

  std::vector<std::string> in_names, out_names;
  for (const auto& in : m.inputs) in_names.push_back(in.name);
  out_names = m.outputs;
  const IoLayout in_layout = io_layout(m, in_names);
  const IoLayout out_layout = io_layout(m, out_names);

  // Parameters referenced by the call sequence, in module order.
  std::set<std::string> referenced;
  for (const auto& c : lowered.calls) {
    if (const auto* f = std::get_if<FuncCall>(&c))
      referenced.insert(f->args.begin(), f->args.end());
    else
      for (const auto& v : std::get<ExternCall>(c).operands) referenced.insert(v);
  }
  std::vector<const ConstTensor*> params;
  std::map<std::string, std::size_t> param_index;
  for (const auto& k : m.consts)
    if (referenced.count(k.name)) {
      param_index[k.name] = params.size();
      params.push_back(&k);
    }

  std::map<std::string, std::string> files;
  const std::string guard = macro + "_MODEL_H_";

  {
    std::ostringstream h;
    h << "/* Entry point and buffer sizes of the " << comment_safe(m.name) << " model. */\n"
      << "#ifndef " << guard << "\n#define " << guard << "\n\n#include <stdint.h>\n\n"
      << "/* Scratch bytes required by " << name << "_run; the arena must be 8-byte aligned. */\n"
      << "#define " << macro << "_ARENA_BYTES " << plan.arena_bytes << "\n\n"
      << "#define " << macro << "_INPUT_COUNT " << in_layout.total << "\n";
    for (std::size_t i = 0; i < in_names.size(); ++i)
      h << "#define " << macro << "_INPUT_" << in_layout.macros[i] << "_OFFSET " << in_layout.offsets[i] << "\n"
        << "#define " << macro << "_INPUT_" << in_layout.macros[i] << "_COUNT " << in_layout.counts[i] << "\n";
    h << "\n#define " << macro << "_OUTPUT_COUNT " << out_layout.total << "\n";
    for (std::size_t i = 0; i < out_names.size(); ++i)
      h << "#define " << macro << "_OUTPUT_" << out_layout.macros[i] << "_OFFSET " << out_layout.offsets[i] << "\n"
        << "#define " << macro << "_OUTPUT_" << out_layout.macros[i] << "_COUNT " << out_layout.counts[i] << "\n";
    h << "\n/* Inputs and outputs are packed back to back in declaration order.\n"
      << "   Returns 0 on success or the status of a failing accelerator call. */\n"
      << "int32_t " << name << "_run(const float* input, float* output, uint8_t* arena);\n\n"
      << "#endif /* " << guard << " */\n";
    files["tvm_model/include/model.h"] = h.str();
  }

  {
    const std::string pguard = macro + "_PARAMS_H_";
    std::ostringstream h;
    h << "/* Weights of the " << comment_safe(m.name) << " model. */\n"
      << "#ifndef " << pguard << "\n#define " << pguard << "\n\n"
      << "#define " << macro << "_PARAM_COUNT " << params.size() << "\n\n";
    if (!params.empty()) h << "extern const float* const " << name << "_params[" << params.size() << "];\n\n";
    h << "#endif /* " << pguard << " */\n";
    files["tvm_model/include/params.h"] = h.str();

    bool non_finite = false;
    for (const auto* p : params) non_finite = non_finite || any_non_finite(p->data);
    std::ostringstream c;
    if (non_finite) c << "#include <math.h>\n";
    c << "#include \"params.h\"\n";
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = *params[i];
      c << "\n/* " << comment_safe(p.name) << " " << shape_to_string(p.shape) << " */\n"
        << "static const float mf_p" << i << "[" << std::max<std::size_t>(1, p.data.size()) << "] = {\n"
        << (p.data.empty() ? "  0.0f\n" : float_array_body(p.data, "  ")) << "};\n";
    }
    if (!params.empty()) {
      c << "\nconst float* const " << name << "_params[" << params.size() << "] = {\n";
      for (std::size_t i = 0; i < params.size(); ++i) c << "  mf_p" << i << (i + 1 < params.size() ? ",\n" : "\n");
      c << "};\n";
    }
    files["tvm_model/source/params.c"] = c.str();
  }

  {
    auto pointer = [&](const ValueRef& v, bool writable) -> std::string {
      for (std::size_t i = 0; i < in_names.size(); ++i)
        if (in_names[i] == v) {
          if (writable) throw EmitError("graph input '" + v + "' is written");
          return "input + " + std::to_string(in_layout.offsets[i]);
        }
      for (std::size_t i = 0; i < out_names.size(); ++i)
        if (out_names[i] == v) return "output + " + std::to_string(out_layout.offsets[i]);
      if (auto it = param_index.find(v); it != param_index.end()) {
        if (writable) throw EmitError("parameter '" + v + "' is written");
        return name + "_params[" + std::to_string(it->second) + "]";
      }
      auto it = plan.offsets.find(v);
      if (it == plan.offsets.end()) throw EmitError("value '" + v + "' has no storage");
      return std::string(writable ? "(float*)" : "(const float*)") + "(arena + " + std::to_string(it->second) + ")";
    };

    std::ostringstream c;
    c << "#include <math.h>\n#include <stdint.h>\n\n#include \"model.h\"\n#include \"params.h\"\n";

    std::set<std::string> declared;
    for (const auto& call : lowered.calls)
      if (const auto* e = std::get_if<ExternCall>(&call))
        if (declared.insert(e->symbol).second) {
          if (declared.size() == 1) c << "\n";
          c << "extern " << e->signature << ";\n";
        }

    std::ostringstream body;
    bool uses_input = false, uses_output = false, uses_arena = false;
    auto note = [&](const std::string& ptr) {
      uses_input = uses_input || ptr.rfind("input", 0) == 0;
      uses_output = uses_output || ptr.rfind("output", 0) == 0;
      uses_arena = uses_arena || ptr.find("arena") != std::string::npos;
      return ptr;
    };
    bool has_status = false;
    for (const auto& call : lowered.calls) {
      if (const auto* f = std::get_if<FuncCall>(&call)) {
        const auto& fn = lowered.funcs[f->func];
        body << "  " << fn.name << "(";
        for (std::size_t i = 0; i < f->args.size(); ++i)
          body << (i ? ", " : "") << note(pointer(f->args[i], fn.writes(fn.params[i].name)));
        body << ");\n";
      } else {
        const auto& e = std::get<ExternCall>(call);
        has_status = true;
        body << "  {\n    /* region " << e.region << ":";
        for (const auto& op : e.ops) body << " " << comment_safe(op);
        body << " */\n    static const int32_t dims[" << std::max<std::size_t>(1, e.dims.size()) << "] = {";
        for (std::size_t i = 0; i < e.dims.size(); ++i) body << (i ? ", " : "") << e.dims[i];
        if (e.dims.empty()) body << "0";
        body << "};\n    status = " << e.symbol << "(";
        for (const auto& v : e.operands) body << note(pointer(v, false)) << ", ";
        body << note(pointer(e.output, true)) << ", dims);\n    if (status != 0) return status;\n  }\n";
      }
    }

    for (const auto& fn : lowered.funcs) c << "\n" << emit_c_func(fn);
    c << "\nint32_t " << name << "_run(const float* input, float* output, uint8_t* arena) {\n";
    if (has_status) c << "  int32_t status;\n";
    if (!uses_input) c << "  (void)input;\n";
    if (!uses_output) c << "  (void)output;\n";
    if (!uses_arena) c << "  (void)arena;\n";
    c << body.str() << "  return 0;\n}\n";
    files["tvm_model/source/model.c"] = c.str();
  }
  return files;
}

void EmitPlan::check_paths() const {
  for (const auto& [path, content] : files) {
    const fs::path p(path);
    if (p.is_absolute() || path.empty()) throw EmitError("emitted path '" + path + "' is not relative");
    for (const auto& part : p)
      if (part == "..") throw EmitError("emitted path '" + path + "' escapes the output directory");
  }
}

EmitPlan emit_model(const HirModule& m, const LoweredModule& lowered, const MemoryPlan& plan,
                    const AccelRegistry& registry, const TemplateSet& templates, const EmitOptions& options) {
  for (const auto& call : lowered.calls)
    if (const auto* e = std::get_if<ExternCall>(&call))
      if (!registry.find(e->accel)) throw EmitError("extern call targets unregistered accelerator '" + e->accel + "'");

  EmitPlan out;
  out.model_name = model_ident(m);
  out.memory = plan;
  out.lowered = lowered;
  out.files = emit_library(m, lowered, plan);
  out.files["tvm_model/include/io.h"] = prepare_io(options.io);

  const TargetProfile& profile = templates.profile(options.target);
  out.substitutions = profile.vars;
  out.substitutions["MODEL_NAME"] = out.model_name;
  out.substitutions["MODEL_MACRO"] = c_macro_name(out.model_name);
  out.substitutions["TARGET"] = profile.name;
  out.substitutions["ARENA_BYTES"] = std::to_string(plan.arena_bytes);

  auto pick = [&](const Template& tpl) {
    Substitutions subs;
    for (const auto& key : tpl.required_keys())
      if (auto it = out.substitutions.find(key); it != out.substitutions.end()) subs.insert(*it);
    return subs;
  };
  out.files["main.c"] = gen_main(templates.main_c(), pick(templates.main_c()));
  const Template& mk = templates.makefile(profile.name);
  Substitutions extra = pick(mk);
  for (const auto& [k, v] : profile.vars) extra.erase(k);
  out.files["tvm_model/makefile"] = gen_make(mk, profile, extra);

  std::vector<std::string> support;
  for (const auto& f : options.support) {
    if (f.name.find('/') != std::string::npos || f.name.empty())
      throw EmitError("support file name '" + f.name + "' must be a plain file name");
    out.files[f.name] = f.content;
    support.push_back(f.name);
  }
  out.files["make.sh"] = gen_make_sh(templates.make_sh(), out.model_name, support);
  if (options.report) out.files["report.json"] = options.report->dump(2) + "\n";
  out.check_paths();
  return out;
}

}  // namespace microforge
