// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace microforge {

/// Pipeline stage a diagnostic originates from. Printed by the CLI so a user
/// can tell a malformed model apart from a lowering or emission failure.
enum class Stage { Parse, Io, Convert, Hir, Partition, Lower, Plan, Emit, Template, Toolchain };

std::string_view stage_name(Stage stage);

class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& message)
      : std::runtime_error(message), stage_(stage) {}

  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

/// Malformed document (not JSON, wrong value types, missing keys).
class SyntaxError : public Error {
 public:
  explicit SyntaxError(const std::string& message) : Error(Stage::Parse, message) {}
};

/// Well-formed document describing an invalid graph. Carries the offending
/// node id (empty for graph-level problems) and field.
class SemanticError : public Error {
 public:
  SemanticError(std::string node, std::string field, const std::string& message)
      : Error(Stage::Parse, message), node_(std::move(node)), field_(std::move(field)) {}

  const std::string& node() const noexcept { return node_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string node_;
  std::string field_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(Stage::Io, message) {}
};

class ConvertError : public Error {
 public:
  explicit ConvertError(const std::string& message) : Error(Stage::Convert, message) {}
};

class ShapeError : public Error {
 public:
  ShapeError(std::string op, const std::string& message)
      : Error(Stage::Hir, message), op_(std::move(op)) {}

  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

class TemplateError : public Error {
 public:
  TemplateError(std::string key, const std::string& message)
      : Error(Stage::Template, message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace microforge
