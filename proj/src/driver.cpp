// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/driver.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "microforge/frontend.hpp"
#include "microforge/interp.hpp"
#include "microforge/lower.hpp"
#include "microforge/planner.hpp"
#include "microforge/zoo.hpp"

namespace microforge {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Pipeline

IoManifest match_io_manifest(const HirModule& m, const IoManifest& manifest) {
  auto match = [&](const std::vector<IoEntry>& entries, const std::vector<std::string>& names,
                   const char* what) {
    std::vector<IoEntry> out;
    for (const auto& e : entries) {
      if (std::find(names.begin(), names.end(), e.name) == names.end())
        throw IoError(std::string("manifest ") + what + " '" + e.name + "' is not a model " + what);
    }
    for (const auto& name : names) {
      auto it = std::find_if(entries.begin(), entries.end(), [&](const IoEntry& e) { return e.name == name; });
      if (it == entries.end()) throw IoError(std::string("manifest lacks model ") + what + " '" + name + "'");
      const Shape expect = m.shape_of(name).value_or(Shape{});
      if (it->shape != expect)
        throw IoError(std::string("manifest ") + what + " '" + name + "' has shape " + shape_to_string(it->shape) +
                      ", model expects " + shape_to_string(expect));
      out.push_back(*it);
    }
    return out;
  };

  std::vector<std::string> in_names;
  for (const auto& in : m.inputs) in_names.push_back(in.name);
  IoManifest out;
  if (!manifest.inputs.empty()) out.inputs = match(manifest.inputs, in_names, "input");
  if (manifest.has_expected()) out.expected_outputs = match(manifest.expected_outputs, m.outputs, "output");
  return out;
}

AccelRegistry registry_from_names(const std::vector<std::string>& names) {
  AccelRegistry registry;
  for (const auto& name : names) registry = register_accelerator(registry, builtin_accelerator(name));
  return registry;
}

CompileResult compile_model(const ModelGraph& graph, const IoManifest& io, const AccelRegistry& registry,
                            const TemplateSet& templates, const std::string& target, bool with_report) {
  templates.profile(target);  // fail before doing any work

  CompileResult r;
  HirModule converted = infer_shapes(convert(graph, default_convert_map()));
  PartitionResult parted = partition(converted, registry);
  r.module = std::move(parted.module);
  r.report = std::move(parted.report);
  r.schedule = topo_schedule(r.module);
  LoweredModule lowered = lower_module(r.module, r.schedule, registry);
  r.memory = plan_memory(r.module, lowered);

  EmitOptions options;
  options.target = target;
  options.io = io;
  if (!r.report.regions.empty()) options.support = templates.accel_support();
  if (with_report) {
    nlohmann::json report;
    report["model"] = r.module.name;
    report["target"] = target;
    report["partition"] = r.report.to_json();
    report["schedule"] = r.schedule;
    report["memory"] = r.memory.plan.to_json(r.memory.live);
    options.report = std::move(report);
  }
  r.emitted = emit_model(r.module, lowered, r.memory.plan, registry, templates, options);
  return r;
}

void write_tree(const fs::path& dir, const std::map<std::string, std::string>& files) {
  for (const auto& [rel, content] : files) {
    const fs::path path = dir / rel;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw EmitError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw EmitError("cannot write '" + path.string() + "'");
    f << content;
    f.close();
    if (!f) throw EmitError("failed writing '" + path.string() + "'");
    if (path.extension() == ".sh")
      fs::permissions(path, fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                      fs::perm_options::add);
  }
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error [" << stage_name(e.stage()) << "]: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 1;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

struct ProcessResult {
  int status = -1;
  std::string output;
};

/// Runs `command` under /bin/sh with stderr merged into the captured output.
ProcessResult run_shell(const std::string& command) {
  ProcessResult r;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) throw ToolchainError("cannot start shell for: " + command);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : 128 + (WIFSIGNALED(raw) ? WTERMSIG(raw) : 0);
  return r;
}

void print_tensor(std::ostream& out, const std::string& name, const TensorValue& t) {
  out << name << " " << shape_to_string(t.shape) << ":";
  char buf[32];
  for (float v : t.data) {
    std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(v));
    out << buf;
  }
  out << "\n";
}

std::string file_stem_for(const std::string& value) { return tir::c_identifier(value); }

}  // namespace

std::optional<fs::path> find_program(const std::string& name) {
  if (name.empty()) return std::nullopt;
  auto executable = [](const fs::path& p) { return fs::is_regular_file(p) && ::access(p.c_str(), X_OK) == 0; };
  if (name.find('/') != std::string::npos) return executable(name) ? std::optional<fs::path>(name) : std::nullopt;
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    const fs::path candidate = fs::path(dir.empty() ? "." : dir) / name;
    if (executable(candidate)) return candidate;
  }
  return std::nullopt;
}

int cmd_compile(const CompileOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TemplateSet templates = TemplateSet::load(opts.templates.value_or(builtin_template_dir()));
    templates.profile(opts.target);
    const ModelGraph graph = load_model(opts.model);
    const AccelRegistry registry = registry_from_names(opts.accels);

    IoManifest io;
    if (opts.io) {
      // Match names and shapes against the converted model before emitting.
      const HirModule shapes = infer_shapes(convert(graph, default_convert_map()));
      io = match_io_manifest(shapes, load_io_manifest(*opts.io));
    }
    CompileResult r = compile_model(graph, io, registry, templates, opts.target, opts.report);

    if (opts.dump_tir) out << dump(r.emitted.lowered);
    write_tree(opts.out, r.emitted.files);
    out << "model " << r.module.name << ": " << r.module.ops.size() << " ops\n";
    out << r.report.to_text();
    out << "arena bytes: " << r.memory.plan.arena_bytes << "\n";
    out << "wrote " << r.emitted.files.size() << " files to " << opts.out.string() << "\n";
    return 0;
  });
}

int cmd_run_ref(const RunRefOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelGraph graph = load_model(opts.model);
    const HirModule m = infer_shapes(convert(graph, default_convert_map()));
    const IoManifest io = match_io_manifest(m, load_io_manifest(opts.io));
    if (io.inputs.empty()) throw IoError("manifest has no inputs");

    TensorMap inputs;
    for (const auto& e : io.inputs) inputs[e.name] = TensorValue(e.shape, e.data);
    const TensorMap outputs = interp(m, inputs);
    for (const auto& name : m.outputs) print_tensor(out, name, outputs.at(name));

    if (opts.out_dir) {
      fs::create_directories(*opts.out_dir);
      IoManifest written;
      for (const auto& e : io.inputs) {
        IoEntry entry{e.name, e.shape, "input_" + file_stem_for(e.name) + ".bin", e.data};
        write_f32_file(*opts.out_dir / entry.file, entry.data);
        written.inputs.push_back(std::move(entry));
      }
      for (const auto& name : m.outputs) {
        const TensorValue& t = outputs.at(name);
        IoEntry entry{name, t.shape, file_stem_for(name) + ".bin", t.data};
        write_f32_file(*opts.out_dir / entry.file, entry.data);
        written.expected_outputs.push_back(std::move(entry));
      }
      std::ofstream f(*opts.out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
      f << serialize_io_manifest(written);
      if (!f) throw IoError("cannot write manifest to '" + opts.out_dir->string() + "'");
      out << "wrote outputs and manifest.json to " << opts.out_dir->string() << "\n";
    }

    if (!io.has_expected()) return 0;
    double max_err = 0.0;
    bool failed = false;
    for (const auto& e : io.expected_outputs) {
      const auto& actual = outputs.at(e.name).data;
      for (std::size_t i = 0; i < actual.size(); ++i) {
        const double d = std::fabs(static_cast<double>(actual[i]) - static_cast<double>(e.data[i]));
        if (!(d <= opts.tol)) failed = true;
        if (d > max_err || std::isnan(d)) max_err = d;
      }
    }
    out << "max abs error: " << max_err << " (tolerance " << opts.tol << ")\n";
    out << (failed ? "FAIL" : "PASS") << "\n";
    return failed ? 1 : 0;
  });
}

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (!fs::is_regular_file(opts.out / "make.sh"))
      throw IoError("'" + opts.out.string() + "' is not a compiled output tree (no make.sh)");
    if (!find_program(opts.cc)) throw ToolchainError("C compiler '" + opts.cc + "' not found on PATH");
    if (!find_program("make")) throw ToolchainError("'make' not found on PATH");

    const std::string dir = shell_quote(fs::absolute(opts.out).string());
    const ProcessResult build = run_shell("cd " + dir + " && CC=" + shell_quote(opts.cc) + " sh ./make.sh");
    if (build.status != 0)
      throw ToolchainError("build failed with status " + std::to_string(build.status) + ":\n" + build.output);

    const ProcessResult run = run_shell("cd " + dir + " && ./main");
    out << run.output;
    out << "main exited with status " << run.status << "\n";
    return run.status;
  });
}

int cmd_zoo_export_gesture(const ExportGestureOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    zoo::GestureModelConfig cfg;
    cfg.window_len = opts.window;
    const ModelGraph graph = zoo::build_gesture_model(cfg, opts.seed);
    {
      if (opts.out.has_parent_path()) fs::create_directories(opts.out.parent_path());
      std::ofstream f(opts.out, std::ios::binary | std::ios::trunc);
      f << serialize_model(graph);
      if (!f) throw IoError("cannot write '" + opts.out.string() + "'");
    }
    out << "wrote " << graph.name << " model (" << graph.parameter_count() << " parameters) to " << opts.out.string()
        << "\n";

    if (opts.io_out) {
      const auto sample = zoo::gen_none_class(cfg, opts.seed, 1).front();
      const fs::path base = opts.io_out->parent_path();
      if (!base.empty()) fs::create_directories(base);
      IoManifest manifest;
      IoEntry entry{graph.inputs.front().name, sample.shape, graph.inputs.front().name + ".bin", sample.data};
      write_f32_file(base / entry.file, entry.data);
      manifest.inputs.push_back(std::move(entry));
      std::ofstream f(*opts.io_out, std::ios::binary | std::ios::trunc);
      f << serialize_io_manifest(manifest);
      if (!f) throw IoError("cannot write '" + opts.io_out->string() + "'");
      out << "wrote input sample manifest to " << opts.io_out->string() << "\n";
    }
    return 0;
  });
}

}  // namespace microforge
