// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/model_format.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "json.hpp"
#include "microforge/error.hpp"

namespace microforge {

using nlohmann::json;

std::string_view dtype_name(DType) { return "f32"; }

int64_t element_count(const Shape& shape) {
  if (shape.empty()) return 0;
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

const OperatorNode* ModelGraph::find_node(std::string_view id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

int64_t ModelGraph::parameter_count() const {
  int64_t total = 0;
  for (const auto& [name, p] : params) total += static_cast<int64_t>(p.data.size());
  return total;
}

// ---------------------------------------------------------------------------
// base64 over little-endian binary32

namespace {

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(std::span<const uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    uint32_t v = (uint32_t{bytes[i]} << 16) | (uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    uint32_t v = uint32_t{bytes[i]} << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    uint32_t v = (uint32_t{bytes[i]} << 16) | (uint32_t{bytes[i + 1]} << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (std::size_t i = 0; i < kAlphabet.size(); ++i)
    lut[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);

  if (text.size() % 4 != 0) throw SyntaxError("base64 payload length is not a multiple of 4");
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    uint32_t v = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      char c = text[i + j];
      if (c == '=' && i + 4 == text.size() && j >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      int d = lut[static_cast<unsigned char>(c)];
      if (d < 0 || pad) throw SyntaxError("invalid base64 character in parameter data");
      v = (v << 6) | static_cast<uint32_t>(d);
    }
    out.push_back(static_cast<uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v));
  }
  return out;
}

std::vector<uint8_t> to_le_bytes(std::span<const float> data) {
  std::vector<uint8_t> bytes;
  bytes.reserve(data.size() * 4);
  for (float f : data) {
    auto bits = std::bit_cast<uint32_t>(f);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<uint8_t>(bits >> (8 * b)));
  }
  return bytes;
}

std::vector<float> from_le_bytes(std::span<const uint8_t> bytes) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= uint32_t{bytes[4 * i + b]} << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

}  // namespace

std::string base64_encode_f32(std::span<const float> data) {
  auto bytes = to_le_bytes(data);
  return base64_encode(bytes);
}

std::vector<float> base64_decode_f32(std::string_view text) {
  auto bytes = base64_decode(text);
  if (bytes.size() % 4 != 0) throw SyntaxError("parameter data is not a whole number of binary32 values");
  return from_le_bytes(bytes);
}

// ---------------------------------------------------------------------------
// JSON field access

namespace {

[[noreturn]] void syntax(const std::string& where, const std::string& what) {
  throw SyntaxError(where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) syntax(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) syntax(where, std::string("missing key '") + key + "'");
  return *it;
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) syntax(where, "expected a string");
  return v.get<std::string>();
}

Shape get_shape(const json& v, const std::string& where) {
  if (!v.is_array()) syntax(where, "expected an array of integers");
  Shape shape;
  for (const auto& e : v) {
    if (!e.is_number_integer()) syntax(where, "expected an array of integers");
    shape.push_back(e.get<int64_t>());
  }
  return shape;
}

DType get_dtype(const json& obj, const std::string& where) {
  auto it = obj.find("dtype");
  if (it == obj.end()) return DType::F32;
  if (!it->is_string() || it->get<std::string>() != "f32") syntax(where, "unsupported dtype (only \"f32\")");
  return DType::F32;
}

std::vector<std::string> get_string_list(const json& v, const std::string& where) {
  if (!v.is_array()) syntax(where, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(get_string(e, where));
  return out;
}

AttrValue get_attr(const json& v, const std::string& where) {
  if (v.is_number_integer()) return v.get<int64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::vector<int64_t> list;
    for (const auto& e : v) {
      if (!e.is_number_integer()) syntax(where, "attribute lists must contain integers");
      list.push_back(e.get<int64_t>());
    }
    return list;
  }
  syntax(where, "attribute must be an int, float, string or int list");
}

json attr_to_json(const AttrValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

std::string read_text(const std::filesystem::path& path, Stage stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::string msg = "cannot open " + path.string();
    if (stage == Stage::Io) throw IoError(msg);
    throw SyntaxError(msg);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Model documents

void validate_model(const ModelGraph& g) {
  auto check_spec = [](const TensorSpec& spec, const std::string& node, const std::string& field) {
    if (spec.shape.empty())
      throw SemanticError(node, field, "tensor '" + spec.name + "' has an empty shape");
    for (int64_t e : spec.shape)
      if (e < 1)
        throw SemanticError(node, field,
                            "tensor '" + spec.name + "' has non-positive extent in " +
                                shape_to_string(spec.shape));
  };

  std::set<std::string> values;
  auto define = [&](const std::string& name, const std::string& node, const std::string& field) {
    if (name.empty()) throw SemanticError(node, field, "empty value name");
    if (!values.insert(name).second)
      throw SemanticError(node, field, "value name '" + name + "' is defined more than once");
  };

  for (const auto& in : g.inputs) {
    check_spec(in, "", "inputs");
    define(in.name, "", "inputs");
  }
  for (const auto& [name, p] : g.params) {
    check_spec(p.spec, "", "params." + name);
    define(name, "", "params." + name);
    if (static_cast<int64_t>(p.data.size()) != element_count(p.spec.shape))
      throw SemanticError("", "params." + name,
                          "parameter '" + name + "' holds " + std::to_string(p.data.size()) +
                              " values but shape " + shape_to_string(p.spec.shape) + " needs " +
                              std::to_string(element_count(p.spec.shape)));
  }
  for (const auto& n : g.nodes) {
    if (n.op_name.empty()) throw SemanticError(n.id, "op", "node '" + n.id + "' has no operator name");
    define(n.id, n.id, "id");
  }

  std::set<std::string> used_params;
  for (const auto& n : g.nodes) {
    for (const auto& ref : n.inputs) {
      if (!values.count(ref))
        throw SemanticError(n.id, "inputs",
                            "node '" + n.id + "' references unknown value '" + ref + "'");
      if (g.params.count(ref)) used_params.insert(ref);
    }
    for (const auto& ref : n.param_refs) {
      if (!g.params.count(ref))
        throw SemanticError(n.id, "params",
                            "node '" + n.id + "' references unknown parameter '" + ref + "'");
      used_params.insert(ref);
    }
  }
  for (const auto& [name, p] : g.params)
    if (!used_params.count(name))
      throw SemanticError("", "params." + name, "parameter '" + name + "' is never referenced");

  if (g.outputs.empty()) throw SemanticError("", "outputs", "graph declares no outputs");
  std::set<std::string> seen_outputs;
  for (const auto& out : g.outputs) {
    if (!g.find_node(out))
      throw SemanticError("", "outputs", "output '" + out + "' is not produced by any node");
    if (!seen_outputs.insert(out).second)
      throw SemanticError("", "outputs", "output '" + out + "' is listed twice");
  }

  // Cycle check: every node must be reachable by topological ordering.
  (void)topological_nodes(g);
}

std::vector<const OperatorNode*> topological_nodes(const ModelGraph& g) {
  std::map<std::string, const OperatorNode*> by_id;
  for (const auto& n : g.nodes) by_id[n.id] = &n;

  std::map<std::string, int> pending;
  std::map<std::string, std::vector<std::string>> consumers;
  for (const auto& n : g.nodes) {
    std::set<std::string> deps;
    for (const auto& ref : n.inputs)
      if (by_id.count(ref)) deps.insert(ref);
    pending[n.id] = static_cast<int>(deps.size());
    for (const auto& d : deps) consumers[d].push_back(n.id);
  }

  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, count] : pending)
    if (count == 0) ready.push(id);

  std::vector<const OperatorNode*> order;
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    order.push_back(by_id[id]);
    for (const auto& c : consumers[id])
      if (--pending[c] == 0) ready.push(c);
  }
  if (order.size() != g.nodes.size()) {
    for (const auto& [id, count] : pending)
      if (count > 0)
        throw SemanticError(id, "inputs", "graph contains a cycle through node '" + id + "'");
  }
  return order;
}

ModelGraph parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("model is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SyntaxError("model document must be a JSON object");

  ModelGraph g;
  g.name = get_string(require(doc, "name", "model"), "name");

  const json& inputs = require(doc, "inputs", "model");
  if (!inputs.is_array()) syntax("inputs", "expected an array");
  for (const auto& in : inputs) {
    TensorSpec spec;
    spec.name = get_string(require(in, "name", "inputs"), "inputs.name");
    spec.dtype = get_dtype(in, "inputs." + spec.name);
    spec.shape = get_shape(require(in, "shape", "inputs." + spec.name), "inputs." + spec.name + ".shape");
    g.inputs.push_back(std::move(spec));
  }

  g.outputs = get_string_list(require(doc, "outputs", "model"), "outputs");

  const json& nodes = require(doc, "nodes", "model");
  if (!nodes.is_array()) syntax("nodes", "expected an array");
  for (const auto& jn : nodes) {
    OperatorNode n;
    n.id = get_string(require(jn, "id", "nodes"), "nodes.id");
    const std::string where = "nodes." + n.id;
    n.op_name = get_string(require(jn, "op", where), where + ".op");
    if (auto it = jn.find("inputs"); it != jn.end()) n.inputs = get_string_list(*it, where + ".inputs");
    if (auto it = jn.find("params"); it != jn.end()) n.param_refs = get_string_list(*it, where + ".params");
    if (auto it = jn.find("attrs"); it != jn.end()) {
      if (!it->is_object()) syntax(where + ".attrs", "expected an object");
      for (const auto& [k, v] : it->items()) n.attrs[k] = get_attr(v, where + ".attrs." + k);
    }
    g.nodes.push_back(std::move(n));
  }

  if (auto it = doc.find("params"); it != doc.end()) {
    if (!it->is_object()) syntax("params", "expected an object");
    for (const auto& [name, jp] : it->items()) {
      const std::string where = "params." + name;
      ParamTensor p;
      p.spec.name = name;
      p.spec.dtype = get_dtype(jp, where);
      p.spec.shape = get_shape(require(jp, "shape", where), where + ".shape");
      p.data = base64_decode_f32(get_string(require(jp, "data_b64", where), where + ".data_b64"));
      g.params.emplace(name, std::move(p));
    }
  }

  validate_model(g);
  return g;
}

ModelGraph load_model(const std::filesystem::path& path) {
  return parse_model(read_text(path, Stage::Parse));
}

std::string serialize_model(const ModelGraph& g) {
  json doc;
  doc["name"] = g.name;
  doc["inputs"] = json::array();
  for (const auto& in : g.inputs)
    doc["inputs"].push_back({{"name", in.name}, {"dtype", "f32"}, {"shape", in.shape}});
  doc["outputs"] = g.outputs;
  doc["nodes"] = json::array();
  for (const auto& n : g.nodes) {
    json jn{{"id", n.id}, {"op", n.op_name}, {"inputs", n.inputs}};
    json attrs = json::object();
    for (const auto& [k, v] : n.attrs) attrs[k] = attr_to_json(v);
    jn["attrs"] = attrs;
    jn["params"] = n.param_refs;
    doc["nodes"].push_back(std::move(jn));
  }
  doc["params"] = json::object();
  for (const auto& [name, p] : g.params)
    doc["params"][name] = {{"dtype", "f32"}, {"shape", p.spec.shape}, {"data_b64", base64_encode_f32(p.data)}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// IO manifests and raw binaries

std::vector<float> read_f32_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing file " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0)
    throw IoError(path.string() + ": byte length " + std::to_string(bytes.size()) +
                  " is not a multiple of 4");
  return from_le_bytes(bytes);
}

void write_f32_file(const std::filesystem::path& path, std::span<const float> data) {
  auto bytes = to_le_bytes(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {

std::vector<IoEntry> parse_io_entries(const json& list, const std::string& section,
                                      const std::filesystem::path& base_dir) {
  if (!list.is_array()) syntax(section, "expected an array");
  std::vector<IoEntry> out;
  for (const auto& je : list) {
    IoEntry e;
    e.name = get_string(require(je, "name", section), section + ".name");
    const std::string where = section + "." + e.name;
    e.shape = get_shape(require(je, "shape", where), where + ".shape");
    if (e.shape.empty() || std::any_of(e.shape.begin(), e.shape.end(), [](int64_t x) { return x < 1; }))
      throw IoError(where + ": shape " + shape_to_string(e.shape) + " must have positive extents");
    e.file = get_string(require(je, "file", where), where + ".file");

    const auto full = base_dir / e.file;
    std::error_code ec;
    auto actual = std::filesystem::file_size(full, ec);
    if (ec) throw IoError(where + ": missing file " + full.string());
    const auto expected = static_cast<std::uintmax_t>(element_count(e.shape)) * 4;
    if (actual != expected)
      throw IoError(where + ": length mismatch for " + full.string() + ", expected " +
                    std::to_string(expected) + " bytes, found " + std::to_string(actual));
    e.data = read_f32_file(full);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

IoManifest parse_io_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("manifest is not valid JSON: ") + e.what());
  }
  IoManifest m;
  try {
    m.inputs = parse_io_entries(require(doc, "inputs", "manifest"), "inputs", base_dir);
    if (auto it = doc.find("expected_outputs"); it != doc.end() && !it->is_null())
      m.expected_outputs = parse_io_entries(*it, "expected_outputs", base_dir);
  } catch (const SyntaxError& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
  return m;
}

IoManifest load_io_manifest(const std::filesystem::path& path) {
  return parse_io_manifest(read_text(path, Stage::Io), path.parent_path());
}

std::string serialize_io_manifest(const IoManifest& m) {
  auto entries = [](const std::vector<IoEntry>& list) {
    json arr = json::array();
    for (const auto& e : list) arr.push_back({{"name", e.name}, {"shape", e.shape}, {"file", e.file.generic_string()}});
    return arr;
  };
  json doc;
  doc["inputs"] = entries(m.inputs);
  if (m.has_expected()) doc["expected_outputs"] = entries(m.expected_outputs);
  return doc.dump(2) + "\n";
}

}  // namespace microforge
