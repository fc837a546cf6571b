#pragma once

#include <cstdint>
#include <vector>

#include "camctx/attention.hpp"
#include "camctx/membank.hpp"
#include "camctx/trace.hpp"

namespace camctx {

enum class ProposalKind : std::uint8_t { object, distractor, background };

// One frame's proposals as the frozen detector sees them, with training labels.
struct ExtractedFrame {
  ProposalBatch batch;
  Matrix embeddings;        // exact per-proposal embeddings (the pooled view up to rounding)
  std::vector<int> labels;  // class id, or n_classes for background
  std::vector<ProposalKind> kinds;
  std::vector<int> instance_index;  // index into Frame::instances, -1 for background

  // Pooled embeddings with boxes and scores, ready for curation.
  std::vector<ScoredDetection> detections() const;
};

// Stand-in for a frozen, pre-trained first-stage detector. Every output is a
// pure function of (seed, camera, frame, proposal); nothing here is trainable.
//
// Embeddings depend only on identity (class prototype, per-individual noise,
// per-frame noise), never on where the box sits, so mirroring a frame leaves
// them unchanged.
class SurrogateExtractor {
 public:
  SurrogateExtractor(const TraceConfig& cfg, std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t d_feat() const noexcept { return cfg_.d_feat; }
  std::size_t n_classes() const noexcept { return cfg_.n_classes; }
  int background_label() const noexcept { return static_cast<int>(cfg_.n_classes); }

  const std::vector<double>& class_prototype(int cls) const { return class_prototypes_.at(static_cast<std::size_t>(cls)); }
  std::vector<double> distractor_prototype(const CameraTrace& cam, std::size_t distractor) const;
  std::vector<double> background_prototype(std::uint32_t camera) const;

  ExtractedFrame extract(const CameraTrace& cam, std::size_t frame_position) const;

  // Extracts every frame of a camera and curates it into a long-term bank.
  // `has_object` flags are attached for the positive_oracle strategy.
  LongTermBank build_bank(const CameraTrace& cam, const CurationStrategy& strategy,
                          std::size_t capacity = kDefaultBankCapacity) const;

 private:
  TraceConfig cfg_;
  std::uint64_t seed_;
  std::vector<std::vector<double>> class_prototypes_;
  std::vector<double> background_base_;
};

}  // namespace camctx
