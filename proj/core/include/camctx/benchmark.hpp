#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "camctx/dataset.hpp"
#include "camctx/detector.hpp"
#include "camctx/evalkit.hpp"
#include "camctx/train.hpp"

namespace camctx {

// Detection methods: the attention modes plus the three context-free or
// heuristic baselines, which all run a single-frame classifier.
enum class Method : std::uint8_t { single, majvote, stspatial, sf, st, lt, st_lt };

std::string_view to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view text) noexcept;
// Mode of the model a method needs; the baselines need a single-frame classifier.
ContextMode model_mode(Method m) noexcept;

struct DetectOptions {
  Method method = Method::single;
  std::int64_t horizon = 30 * 86400;
  std::uint32_t short_radius = kShortTermRadius;
};

// Time offsets attended by the top-scoring detection of one keyframe.
struct KeyframeAttention {
  std::uint64_t frame_id = 0;
  std::vector<std::int64_t> offsets;
  std::vector<double> weights;  // parallel to offsets
};

// One detection per proposal, background predictions included (class id =
// n_classes). For long-term modes `attention` receives the thresholded
// timeline of each keyframe's top-scoring object detection.
std::vector<Detection> detect_camera(const DetectorModel& model, const PreparedCamera& cam,
                                     const DetectOptions& opt,
                                     std::vector<KeyframeAttention>* attention = nullptr,
                                     double attention_threshold = 0.01);

// Drops background predictions.
std::vector<Detection> foreground(std::span<const Detection> dets, int n_classes);

struct BenchmarkConfig {
  TraceConfig trace;
  CurationStrategy strategy = CurationStrategy::top(1);
  std::size_t capacity = kDefaultBankCapacity;
  std::uint64_t extractor_seed = 7;
  TrainConfig train;
  std::vector<std::int64_t> horizons{60, 86400, 7 * 86400, 30 * 86400};

  // Sections [trace], [bank] (strategy, capacity, extractor_seed), [train],
  // [eval] (horizons = comma-separated durations).
  static BenchmarkConfig from_config(const KeyValueConfig& cfg);
  static BenchmarkConfig load(const std::filesystem::path& path);
};

struct PreparedWorld {
  TraceSet traces;
  std::vector<PreparedCamera> train;
  std::vector<PreparedCamera> test;
};

// Generates the trace, extracts every frame and builds banks with `strategy`.
PreparedWorld prepare_world(const BenchmarkConfig& cfg);
PreparedWorld prepare_world(const BenchmarkConfig& cfg, const CurationStrategy& strategy);
// Same, for an existing trace and banks keyed by camera id (missing -> built).
std::vector<PreparedCamera> prepare_cameras(const TraceSet& traces, std::uint64_t extractor_seed,
                                            const std::vector<LongTermBank>& banks, bool held_out);

DetectorModel train_model(std::span<const PreparedCamera> cameras, ContextMode mode, std::uint32_t n_classes,
                          std::size_t d_feat, std::uint64_t extractor_seed, const TrainConfig& cfg,
                          std::vector<double>* loss_curve = nullptr);

std::vector<GroundTruthBox> ground_truth_of(std::span<const PreparedCamera> cameras);
std::vector<Detection> detect_all(const DetectorModel& model, std::span<const PreparedCamera> cameras,
                                  const DetectOptions& opt, std::vector<KeyframeAttention>* attention = nullptr);
EvalReport evaluate_method(const DetectorModel& model, std::span<const PreparedCamera> cameras,
                           const DetectOptions& opt);

}  // namespace camctx
