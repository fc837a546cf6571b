#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "camctx/attention.hpp"

namespace camctx {

// Key/query start as this multiple of the identity on the embedding columns.
inline constexpr double kAttentionInitScale = 0.1;

// Which context the second stage sees. `single` is the no-context baseline.
enum class ContextMode : std::uint8_t { single = 0, sf = 1, st = 2, lt = 3, st_lt = 4 };

std::string_view to_string(ContextMode mode) noexcept;
std::optional<ContextMode> parse_context_mode(std::string_view text) noexcept;
std::optional<HeadMode> head_mode(ContextMode mode) noexcept;

// Attention head + classifier. Classifier rows: n_classes object classes, then background.
struct DetectorModel {
  ContextMode mode = ContextMode::single;
  std::uint32_t n_classes = 0;
  AttentionParams short_params;  // d_ctx = d_feat
  AttentionParams long_params;   // d_ctx = d_feat + 9
  LinearMap classifier;
  // provenance, carried through the model file
  std::int64_t horizon = 0;
  std::uint64_t extractor_seed = 0;

  static DetectorModel init(ContextMode mode, std::uint32_t n_classes, std::size_t d_feat, std::size_t d_attn,
                            std::uint64_t seed, double temperature = kDefaultTemperature,
                            double attention_scale = kAttentionInitScale);
  // Same shapes, all zeros; used as a gradient accumulator.
  static DetectorModel zeros_like(const DetectorModel& m);

  std::size_t d_feat() const noexcept { return classifier.d_in(); }
  int background() const noexcept { return static_cast<int>(n_classes); }
  void validate() const;

  // short, long, classifier.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;

  friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

// Memory for one keyframe. `long_rows` may have zero rows (empty bank window).
struct ModelInput {
  MatrixView pooled;
  const ShortTermMemory* short_term = nullptr;
  MatrixView long_rows;
  std::span<const std::int64_t> long_times;
};

struct ForwardCache {
  HeadCache head;
  Matrix features;  // classifier input
};

// Classifier logits [n x (n_classes + 1)] after the mode's context stages.
Matrix model_logits(const DetectorModel& model, const ModelInput& input, ForwardCache* cache = nullptr);

// Summed per-proposal cross-entropy; gradients are accumulated into `grad`.
double model_loss_and_grad(const DetectorModel& model, const ModelInput& input, std::span<const int> labels,
                           DetectorModel& grad);
double model_loss(const DetectorModel& model, const ModelInput& input, std::span<const int> labels);

struct ProposalPrediction {
  int class_id = 0;  // may be the background index
  double score = 0.0;
};

// Argmax of the softmax per proposal; ties go to the lowest class index.
std::vector<ProposalPrediction> predict(const DetectorModel& model, const ModelInput& input);
std::vector<ProposalPrediction> predict_from_logits(MatrixView logits);

// Model file, version 1: magic "CAMCTXMD", u32 version, u64 checksum over the
// rest, then shapes, provenance and raw parameters.
std::vector<std::uint8_t> encode_model(const DetectorModel& model);
DetectorModel decode_model(std::span<const std::uint8_t> bytes);
void write_model(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel read_model(const std::filesystem::path& path);

}  // namespace camctx
