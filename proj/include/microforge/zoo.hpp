// Copyright 2026 The Microforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "microforge/interp.hpp"
#include "microforge/model_format.hpp"

namespace microforge::zoo {

/// Two shared depthwise filter stages, a GRU and a softmax classifier over
/// a 6-channel IMU window.
struct GestureModelConfig {
  int64_t channels = 6;
  int64_t window_len = 128;
  int64_t kernel_len = 7;
  int64_t stride = 2;
  int64_t gru_hidden = 16;
  int64_t classes = 21;
};

/// Throws std::invalid_argument for non-positive sizes or when either filter
/// stage would produce an empty sequence.
void check_config(const GestureModelConfig& cfg);

/// Sequence length after the two filter stages.
int64_t gru_sequence_length(const GestureModelConfig& cfg);

/// 2(K+1) + 3H(C+H) + 6H + (H+1)*classes.
int64_t expected_parameter_count(const GestureModelConfig& cfg);

/// conv1d_dw_shared -> conv1d_dw_shared -> gru -> last_timestep -> dense
/// -> softmax, weights uniform in [-0.5, 0.5] from a seeded generator.
ModelGraph build_gesture_model(const GestureModelConfig& cfg, uint64_t seed);

/// Synthetic "none" recordings shaped [1, channels, window_len]: a random
/// per-channel offset in [-1, 1] (fresh per recording) plus gaussian noise.
std::vector<TensorValue> gen_none_class(const GestureModelConfig& cfg, uint64_t seed, int n,
                                        float noise_sigma = 0.02f);

}  // namespace microforge::zoo
