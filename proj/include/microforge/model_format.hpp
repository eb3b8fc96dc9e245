// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace microforge {

using Shape = std::vector<int64_t>;

/// Only binary32 is supported; the field exists so the format can grow.
enum class DType { F32 };

std::string_view dtype_name(DType dtype);

/// Product of the extents. An empty shape has zero elements.
int64_t element_count(const Shape& shape);

std::string shape_to_string(const Shape& shape);

struct TensorSpec {
  std::string name;
  DType dtype = DType::F32;
  Shape shape;

  friend bool operator==(const TensorSpec&, const TensorSpec&) = default;
};

using AttrValue = std::variant<int64_t, double, std::string, std::vector<int64_t>>;
using AttrMap = std::map<std::string, AttrValue>;

/// One frontend operator. `op_name` is the convert-map key; every node
/// produces a single value named by its `id`.
struct OperatorNode {
  std::string id;
  std::string op_name;
  std::vector<std::string> inputs;
  AttrMap attrs;
  std::vector<std::string> param_refs;

  friend bool operator==(const OperatorNode&, const OperatorNode&) = default;
};

struct ParamTensor {
  TensorSpec spec;
  std::vector<float> data;

  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

struct ModelGraph {
  std::string name;
  std::vector<TensorSpec> inputs;
  std::vector<std::string> outputs;
  std::vector<OperatorNode> nodes;
  std::map<std::string, ParamTensor> params;

  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;

  const OperatorNode* find_node(std::string_view id) const;
  /// Total number of parameter scalars.
  int64_t parameter_count() const;
};

/// Parses and validates a model document. Throws SyntaxError for malformed
/// JSON or wrongly typed fields and SemanticError for invalid graphs.
ModelGraph parse_model(std::string_view text);
ModelGraph load_model(const std::filesystem::path& path);

/// Checks every ModelGraph invariant; throws SemanticError on the first
/// violation. parse_model calls this.
void validate_model(const ModelGraph& graph);

/// Nodes in dependency order, ties broken by node id.
std::vector<const OperatorNode*> topological_nodes(const ModelGraph& graph);

std::string serialize_model(const ModelGraph& graph);

struct IoEntry {
  std::string name;
  Shape shape;
  std::filesystem::path file;  // relative, as written in the manifest
  std::vector<float> data;
};

struct IoManifest {
  std::vector<IoEntry> inputs;
  std::vector<IoEntry> expected_outputs;

  bool has_expected() const { return !expected_outputs.empty(); }
};

/// Parses a manifest and loads every referenced binary from `base_dir`.
/// Throws IoError for missing files or byte-length mismatches.
IoManifest parse_io_manifest(std::string_view text, const std::filesystem::path& base_dir);
IoManifest load_io_manifest(const std::filesystem::path& path);

/// Writes the manifest document only; binaries are written separately.
std::string serialize_io_manifest(const IoManifest& manifest);

std::vector<float> read_f32_file(const std::filesystem::path& path);
void write_f32_file(const std::filesystem::path& path, std::span<const float> data);

std::string base64_encode_f32(std::span<const float> data);
std::vector<float> base64_decode_f32(std::string_view text);

}  // namespace microforge
