#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camctx/config.hpp"
#include "camctx/dataset.hpp"
#include "camctx/detector.hpp"

namespace camctx {

struct TrainConfig {
  std::uint32_t steps = 300;
  std::uint32_t clips_per_batch = 8;
  std::uint32_t clip_length = 4;  // consecutive frames, padded with the last one
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0004;
  double flip_probability = 0.5;
  double clip_norm = 5.0;  // global gradient-norm cap, 0 disables
  std::int64_t horizon = 30 * 86400;  // long-term window half-width, seconds
  std::uint32_t short_radius = kShortTermRadius;
  std::uint32_t d_attn = 0;  // 0: same as d_feat
  double temperature = kDefaultTemperature;
  double attention_scale = kAttentionInitScale;  // initial key/query identity scale
  double key_query_lr_scale = 1.0;  // learning-rate multiplier for the key and query maps
  std::uint64_t seed = 1;

  void validate() const;
  // Reads "<prefix>key" entries; unknown keys under the prefix are rejected.
  static TrainConfig from_config(const KeyValueConfig& cfg, std::string_view prefix = "train.");
  static std::vector<std::string_view> known_keys();
};

struct TrainResult {
  DetectorModel model;
  std::vector<double> loss_curve;  // mean per-proposal loss at each step
};

// Context handed to the model for keyframe `i` of `cam`, as used by training
// and detection alike. `short_storage` must outlive the returned input.
ModelInput keyframe_input(const PreparedCamera& cam, std::size_t i, ContextMode mode, std::int64_t horizon,
                          std::uint32_t short_radius, bool flipped, ShortTermMemory& short_storage);

// Clip-sampled momentum SGD on per-proposal cross-entropy. Clips are
// `clip_length` consecutive frames of one burst; every clip frame is a
// keyframe. A flipped clip is paired with the mirrored bank. Gradients are
// summed in a fixed order, so the result is a pure function of the inputs.
// Throws TrainingError at the first non-finite loss.
TrainResult train(DetectorModel model, std::span<const PreparedCamera> cameras, const TrainConfig& cfg,
                  const std::function<void(std::uint32_t, double)>& progress = {});

}  // namespace camctx
