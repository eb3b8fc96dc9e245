// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "microforge/accel.hpp"
#include "microforge/error.hpp"
#include "microforge/hir.hpp"
#include "microforge/lower.hpp"
#include "microforge/model_format.hpp"
#include "microforge/planner.hpp"
#include "microforge/tir.hpp"

namespace microforge {

class EmitError : public Error {
 public:
  explicit EmitError(const std::string& message) : Error(Stage::Emit, message) {}
};

using Substitutions = std::map<std::string, std::string>;

/// Text with `${KEY}` placeholders, KEY in [A-Z0-9_]. Rendering requires the
/// provided keys to be exactly the placeholder set.
class Template {
 public:
  Template(std::string name, std::string body);

  const std::string& name() const { return name_; }
  const std::string& body() const { return body_; }
  const std::set<std::string>& required_keys() const { return keys_; }

  /// Throws TemplateError naming the first unbound or unknown key.
  std::string render(const Substitutions& subs) const;

 private:
  std::string name_;
  std::string body_;
  std::set<std::string> keys_;
};

/// Toolchain variables for one makefile flavor (CC, AR, CFLAGS, LDFLAGS, LDLIBS).
struct TargetProfile {
  std::string name;
  std::string description;
  Substitutions vars;
};

/// A file placed at the output root and installed by make.sh.
struct SupportFile {
  std::string name;
  std::string content;
};

/// Contents of a template directory:
///   main.c.tpl, make.sh.tpl, profiles.json, makefile_lib.<profile>,
///   optional crt/{tvm_crt.h, mock_accel.c}.
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& dir);

  const Template& main_c() const { return *main_; }
  const Template& make_sh() const { return *make_sh_; }
  /// Throws TemplateError listing the available profiles.
  const TargetProfile& profile(const std::string& name) const;
  const Template& makefile(const std::string& profile) const;
  std::vector<std::string> profile_names() const;
  const std::vector<SupportFile>& accel_support() const { return accel_support_; }

 private:
  std::optional<Template> main_;
  std::optional<Template> make_sh_;
  std::map<std::string, TargetProfile> profiles_;
  std::map<std::string, Template> makefiles_;
  std::vector<SupportFile> accel_support_;
};

/// `$MICROFORGE_TEMPLATES` if set, otherwise the source tree's templates/.
std::filesystem::path builtin_template_dir();

/// Shortest-round-trip-safe binary32 literal: 9 significant digits, `f`
/// suffix, always with a '.' or exponent. Non-finite values use <math.h>.
std::string c_float_literal(float v);

/// Upper-case C identifier for macro names.
std::string c_macro_name(std::string_view text);

std::string emit_c_func(const tir::TirFunc& f);

/// `io.h`: sample arrays, per-entry and total counts, and
/// IO_FOR_EACH_INPUT / IO_FOR_EACH_EXPECTED X-macros in manifest order.
std::string prepare_io(const IoManifest& manifest);

std::string gen_main(const Template& tpl, const Substitutions& subs);
/// Renders the profile's variables plus `extra` (MODEL_NAME, TARGET).
std::string gen_make(const Template& tpl, const TargetProfile& profile, const Substitutions& extra);
/// Installs the given root-level support files into tvm_model/include or
/// tvm_model/source by extension, then runs make.
std::string gen_make_sh(const Template& tpl, const std::string& model_name,
                        const std::vector<std::string>& support_files);

struct PlannedMemory {
  Liveness live;
  MemoryPlan plan;
};

/// Plans every value defined by a call that is not a graph output.
PlannedMemory plan_memory(const HirModule& m, const LoweredModule& lowered);

struct EmitOptions {
  std::string target = "host";
  IoManifest io;
  std::vector<SupportFile> support;
  std::optional<nlohmann::json> report;
};

struct EmitPlan {
  std::string model_name;  // C identifier used for symbols
  std::map<std::string, std::string> files;
  Substitutions substitutions;
  MemoryPlan memory;
  LoweredModule lowered;

  /// Throws EmitError for absolute paths or `..` components.
  void check_paths() const;
};

/// The tvm_model library sources alone: model.h, model.c, params.h, params.c
/// keyed by path relative to the output root.
std::map<std::string, std::string> emit_library(const HirModule& m, const LoweredModule& lowered,
                                                 const MemoryPlan& plan);

EmitPlan emit_model(const HirModule& m, const LoweredModule& lowered, const MemoryPlan& plan,
                    const AccelRegistry& registry, const TemplateSet& templates, const EmitOptions& options);

}  // namespace microforge
