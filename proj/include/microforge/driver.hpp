// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "microforge/accel.hpp"
#include "microforge/emit.hpp"
#include "microforge/hir.hpp"
#include "microforge/model_format.hpp"

namespace microforge {

class ToolchainError : public Error {
 public:
  explicit ToolchainError(const std::string& message) : Error(Stage::Toolchain, message) {}
};

struct CompileResult {
  HirModule module;  // partitioned
  PartitionReport report;
  std::vector<std::string> schedule;
  PlannedMemory memory;
  EmitPlan emitted;
};

/// Whole pipeline without touching the filesystem. `io` must already match
/// the model (see match_io_manifest).
CompileResult compile_model(const ModelGraph& graph, const IoManifest& io, const AccelRegistry& registry,
                            const TemplateSet& templates, const std::string& target, bool with_report);

/// Reorders the manifest to the model's input and output order. Throws
/// IoError for missing, extra or mis-shaped entries.
IoManifest match_io_manifest(const HirModule& m, const IoManifest& manifest);

AccelRegistry registry_from_names(const std::vector<std::string>& names);

/// Writes every file under `dir`, creating directories; make.sh is made executable.
void write_tree(const std::filesystem::path& dir, const std::map<std::string, std::string>& files);

struct CompileOptions {
  std::filesystem::path model;
  std::optional<std::filesystem::path> io;
  std::vector<std::string> accels;
  std::string target = "host";
  std::filesystem::path out;
  bool report = false;
  bool dump_tir = false;
  std::optional<std::filesystem::path> templates;  // defaults to builtin_template_dir()
};

struct RunRefOptions {
  std::filesystem::path model;
  std::filesystem::path io;
  std::optional<std::filesystem::path> out_dir;
  double tol = 1e-5;
};

struct VerifyOptions {
  std::filesystem::path out;
  std::string cc = "cc";
};

struct ExportGestureOptions {
  uint64_t seed = 0;
  int64_t window = 128;
  std::filesystem::path out;
  std::optional<std::filesystem::path> io_out;
};

/// Each returns the process exit code and prints diagnostics as
/// `error [<stage>]: <message>` on `err`.
int cmd_compile(const CompileOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run_ref(const RunRefOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err);
int cmd_zoo_export_gesture(const ExportGestureOptions& opts, std::ostream& out, std::ostream& err);

/// Searches PATH (or checks the path itself when it contains '/').
std::optional<std::filesystem::path> find_program(const std::string& name);

}  // namespace microforge
