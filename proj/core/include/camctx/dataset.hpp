#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "camctx/evalkit.hpp"
#include "camctx/extractor.hpp"
#include "camctx/membank.hpp"
#include "camctx/trace.hpp"

namespace camctx {

// One frame as the second stage sees it: frozen pooled proposals plus labels.
struct PreparedFrame {
  Matrix pooled;
  std::vector<BoxPx> boxes;
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<ProposalKind> kinds;
  std::int64_t time = 0;
  std::uint64_t frame_id = 0;
  std::uint32_t burst = 0;
  std::uint32_t burst_position = 0;
};

// Every frame of one camera, extracted once, plus its long-term bank in both
// orientations (flip augmentation swaps in the mirrored one).
struct PreparedCamera {
  std::uint32_t camera_id = 0;
  bool held_out = false;
  std::vector<PreparedFrame> frames;
  LongTermBank bank;
  BankContext context;
  BankContext flipped_context;
  std::vector<GroundTruthBox> ground_truth;

  // Frames of the same burst within +-radius of frame i, as a half-open index range.
  std::pair<std::size_t, std::size_t> burst_window(std::size_t i, std::uint32_t radius) const;
  ShortTermMemory short_term(std::size_t i, std::uint32_t radius) const;
};

inline constexpr std::uint32_t kShortTermRadius = 2;

// Ground truth of a trace: one box per true object; distractors are background.
std::vector<GroundTruthBox> ground_truth_of(const CameraTrace& cam);

// Extracts all frames. Without a bank the camera gets an empty one.
PreparedCamera prepare_camera(const CameraTrace& cam, const SurrogateExtractor& extractor,
                              std::optional<LongTermBank> bank = std::nullopt);

}  // namespace camctx
