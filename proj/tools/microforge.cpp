// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "CLI11.hpp"
#include "microforge/driver.hpp"

int main(int argc, char** argv) {
  using namespace microforge;

  CLI::App app{"microforge: compile neural-network models to standalone C libraries"};
  app.require_subcommand(1);

  CompileOptions compile;
  std::string compile_io;
  auto* c = app.add_subcommand("compile", "Emit the C library, test harness and build scripts");
  c->add_option("--model", compile.model, "Model file")->required();
  c->add_option("--io", compile_io, "I/O sample manifest embedded as io.h");
  c->add_option("--accel", compile.accels, "Built-in accelerator to partition for (repeatable)");
  c->add_option("--target", compile.target, "Makefile profile")->capture_default_str();
  c->add_option("--out", compile.out, "Output directory")->required();
  c->add_flag("--report", compile.report, "Write report.json with partition and memory plan");
  c->add_flag("--dump-tir", compile.dump_tir, "Print the lowered loop nests");

  RunRefOptions run_ref;
  std::string run_ref_out;
  auto* r = app.add_subcommand("run-ref", "Run the reference interpreter on a manifest");
  r->add_option("--model", run_ref.model, "Model file")->required();
  r->add_option("--io", run_ref.io, "I/O sample manifest")->required();
  r->add_option("--out-dir", run_ref_out, "Write outputs and a manifest with expected outputs here");
  r->add_option("--tol", run_ref.tol, "Absolute tolerance against expected outputs")->capture_default_str();

  VerifyOptions verify;
  auto* v = app.add_subcommand("verify", "Build a compiled tree with the host compiler and run it");
  v->add_option("--out", verify.out, "Directory produced by compile")->required();
  v->add_option("--cc", verify.cc, "Host C compiler")->capture_default_str();

  ExportGestureOptions gesture;
  std::string gesture_io;
  auto* zoo = app.add_subcommand("zoo", "Built-in models");
  zoo->require_subcommand(1);
  auto* g = zoo->add_subcommand("export-gesture", "Write the gesture model and an optional input sample");
  g->add_option("--seed", gesture.seed, "Weight and sample seed")->capture_default_str();
  g->add_option("--window", gesture.window, "Window length in frames")->capture_default_str();
  g->add_option("--out", gesture.out, "Model file to write")->required();
  g->add_option("--io-out", gesture_io, "Input manifest to write");

  CLI11_PARSE(app, argc, argv);

  if (c->parsed()) {
    if (!compile_io.empty()) compile.io = compile_io;
    return cmd_compile(compile, std::cout, std::cerr);
  }
  if (r->parsed()) {
    if (!run_ref_out.empty()) run_ref.out_dir = run_ref_out;
    return cmd_run_ref(run_ref, std::cout, std::cerr);
  }
  if (v->parsed()) return cmd_verify(verify, std::cout, std::cerr);
  if (g->parsed()) {
    if (!gesture_io.empty()) gesture.io_out = gesture_io;
    return cmd_zoo_export_gesture(gesture, std::cout, std::cerr);
  }
  return 1;
}
