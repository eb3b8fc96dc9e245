// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "microforge/zoo.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace microforge::zoo {

namespace {

// mt19937_64 is fully specified by the standard; the distributions are not,
// so the transforms are spelled out to keep outputs identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  float uniform(float lo, float hi) { return static_cast<float>(lo + (hi - lo) * unit()); }
  double gaussian() {
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

ParamTensor random_param(Rng& rng, const std::string& name, Shape shape) {
  ParamTensor p;
  p.spec = {name, DType::F32, std::move(shape)};
  p.data.resize(static_cast<std::size_t>(element_count(p.spec.shape)));
  for (auto& v : p.data) v = rng.uniform(-0.5f, 0.5f);
  return p;
}

int64_t stage_len(int64_t len, const GestureModelConfig& cfg) {
  return (len - cfg.kernel_len) / cfg.stride + 1;
}

}  // namespace

void check_config(const GestureModelConfig& cfg) {
  if (cfg.channels < 1 || cfg.window_len < 1 || cfg.kernel_len < 1 || cfg.stride < 1 || cfg.gru_hidden < 1 ||
      cfg.classes < 1)
    throw std::invalid_argument("gesture model sizes must be positive");
  if (cfg.window_len < cfg.kernel_len || stage_len(cfg.window_len, cfg) < cfg.kernel_len)
    throw std::invalid_argument("window_len " + std::to_string(cfg.window_len) +
                                " is too short for two filter stages of length " +
                                std::to_string(cfg.kernel_len));
}

int64_t gru_sequence_length(const GestureModelConfig& cfg) {
  check_config(cfg);
  return stage_len(stage_len(cfg.window_len, cfg), cfg);
}

int64_t expected_parameter_count(const GestureModelConfig& cfg) {
  const int64_t h = cfg.gru_hidden;
  const int64_t filters = 2 * (cfg.kernel_len + 1);
  const int64_t gru = 3 * h * cfg.channels + 3 * h * h + 2 * 3 * h;
  const int64_t classifier = h * cfg.classes + cfg.classes;
  return filters + gru + classifier;
}

ModelGraph build_gesture_model(const GestureModelConfig& cfg, uint64_t seed) {
  check_config(cfg);
  Rng rng(seed);
  const int64_t h = cfg.gru_hidden;

  ModelGraph g;
  g.name = "gesture";
  g.inputs.push_back({"imu", DType::F32, {1, cfg.channels, cfg.window_len}});

  auto add_param = [&](const std::string& name, Shape shape) {
    g.params.emplace(name, random_param(rng, name, std::move(shape)));
    return name;
  };

  for (const char* stage : {"conv1", "conv2"}) {
    const std::string id = stage;
    OperatorNode n{id, "conv1d_dw_shared", {id == "conv1" ? "imu" : "conv1"},
                   {{"kernel_len", cfg.kernel_len}, {"stride", cfg.stride}},
                   {add_param(id + ".kernel", {cfg.kernel_len}), add_param(id + ".bias", {1})}};
    g.nodes.push_back(std::move(n));
  }

  g.nodes.push_back({"gru", "gru", {"conv2"}, {{"hidden", h}},
                     {add_param("gru.w_x", {3 * h, cfg.channels}), add_param("gru.w_h", {3 * h, h}),
                      add_param("gru.b_x", {3 * h}), add_param("gru.b_h", {3 * h})}});
  g.nodes.push_back({"last", "last_timestep", {"gru"}, {}, {}});
  g.nodes.push_back({"fc", "dense", {"last"}, {{"units", cfg.classes}},
                     {add_param("fc.weight", {cfg.classes, h}), add_param("fc.bias", {cfg.classes})}});
  g.nodes.push_back({"probs", "softmax", {"fc"}, {}, {}});
  g.outputs = {"probs"};

  validate_model(g);
  return g;
}

std::vector<TensorValue> gen_none_class(const GestureModelConfig& cfg, uint64_t seed, int n, float noise_sigma) {
  if (n < 1) throw std::invalid_argument("gen_none_class needs n >= 1");
  if (cfg.channels < 1 || cfg.window_len < 1) throw std::invalid_argument("channels and window_len must be positive");
  Rng rng(seed);
  std::vector<TensorValue> samples;
  for (int s = 0; s < n; ++s) {
    auto sample = TensorValue::zeros({1, cfg.channels, cfg.window_len});
    for (int64_t c = 0; c < cfg.channels; ++c) {
      const float offset = rng.uniform(-1.0f, 1.0f);
      for (int64_t t = 0; t < cfg.window_len; ++t)
        sample.data[static_cast<std::size_t>(c * cfg.window_len + t)] =
            offset + static_cast<float>(noise_sigma * rng.gaussian());
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace microforge::zoo
