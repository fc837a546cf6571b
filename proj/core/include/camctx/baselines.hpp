#pragma once

#include <span>
#include <vector>

#include "camctx/dataset.hpp"
#include "camctx/detector.hpp"

namespace camctx {

inline constexpr double kHighConfidence = 0.5;

// Majority vote per keyframe detection. The voters are the detection itself
// and, in every other window frame, the proposal overlapping its box best
// (IoU >= iou_threshold); only confident (score >= threshold), non-background
// voters count. A tie that includes the keyframe's own class keeps it;
// otherwise the lowest tied class wins. Background predictions and scores are
// unchanged.
std::vector<ProposalPrediction> majority_vote(std::span<const PreparedFrame> frames,
                                              std::span<const std::vector<ProposalPrediction>> window,
                                              std::size_t key, int background,
                                              double threshold = kHighConfidence, double iou_threshold = 0.5);

// Keyframe pooled features replaced by sum_j a_j feat_j with a_j proportional
// to 1 / (1 + |dt_j|), over the keyframe itself and, in every other window
// frame, the proposal overlapping the keyframe box best (IoU >= iou_threshold).
// Frames with no such proposal are skipped.
Matrix st_spatial_features(std::span<const PreparedFrame> window, std::size_t key, double iou_threshold = 0.5);

}  // namespace camctx
