// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/error.hpp"

namespace microforge {

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::Parse: return "parse";
    case Stage::Io: return "io";
    case Stage::Convert: return "convert";
    case Stage::Hir: return "shape";
    case Stage::Partition: return "partition";
    case Stage::Lower: return "lower";
    case Stage::Plan: return "plan";
    case Stage::Emit: return "emit";
    case Stage::Template: return "template";
    case Stage::Toolchain: return "toolchain";
  }
  return "unknown";
}

}  // namespace microforge
