#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "camctx/encoding.hpp"
#include "camctx/matrix.hpp"

namespace camctx {

inline constexpr std::size_t kDefaultBankCapacity = 8500;

// Which per-frame detections enter the long-term bank.
//
// Text form (config files and CLI): "top_k:8", "stride:2" or "stride:2:1"
// (stride and base), "positive_only:0.5", "positive_oracle", "all".
// `positive_oracle` keeps the top-1 detection of frames that ground truth marks
// as containing an object; it is the oracle variant of positive_only.
struct CurationStrategy {
  enum class Kind : std::uint8_t {
    top_k = 1,
    positive_only = 2,
    stride_subsample = 3,
    all = 4,
    positive_oracle = 5,
  };

  Kind kind = Kind::top_k;
  std::uint32_t k = 1;
  double score_threshold = 0.5;
  std::uint32_t stride = 1;
  std::uint32_t base = 0;

  static CurationStrategy top(std::uint32_t k);
  static CurationStrategy positive(double threshold = 0.5);
  static CurationStrategy strided(std::uint32_t stride, std::uint32_t base = 0);
  static CurationStrategy keep_all();
  static CurationStrategy oracle_positive();

  // Throws ConfigError on malformed text or violated invariants.
  static CurationStrategy parse(std::string_view text);
  std::string to_string() const;
  void validate() const;

  friend bool operator==(const CurationStrategy&, const CurationStrategy&) = default;
};

// A detection offered for storage: pooled embedding plus metadata.
struct ScoredDetection {
  std::vector<double> embedding;
  BoxPx box;
  double score = 0.0;
  std::optional<int> predicted_class;
};

// One stored context feature.
struct ContextEntry {
  std::vector<float> embedding;
  SpatioTemporalCode code;
  Timestamp timestamp;
  std::uint64_t frame_index = 0;
  std::uint32_t box_rank = 0;
  BoxPx box;
  double score = 0.0;
  std::uint64_t source_frame_id = 0;
  std::optional<int> predicted_class;

  std::int64_t time() const { return timestamp.to_epoch_seconds(); }

  friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

// Frame-level input to bank construction.
struct FrameDetections {
  std::uint32_t camera_id = 0;
  std::uint64_t frame_index = 0;
  std::uint64_t frame_id = 0;
  Timestamp timestamp;
  std::vector<ScoredDetection> detections;
  // Ground-truth "frame contains an object" flag; only positive_oracle reads it.
  std::optional<bool> has_object;
};

// Applies `strategy` to one frame. Detections are ranked by descending score,
// ties by ascending input position; the rank is recorded on each entry.
std::vector<ContextEntry> curate_frame(std::span<const ScoredDetection> detections,
                                       const CurationStrategy& strategy,
                                       std::uint64_t frame_index, std::uint64_t frame_id,
                                       const Timestamp& timestamp,
                                       std::optional<bool> has_object = std::nullopt);

// Per-camera, time-ordered long-term memory. Entries are kept sorted by
// (frame index, box rank); when full, the oldest entries are evicted first.
class LongTermBank {
 public:
  LongTermBank() = default;
  LongTermBank(std::uint32_t camera_id, std::size_t d_feat, CurationStrategy strategy,
               std::size_t capacity = kDefaultBankCapacity);

  std::uint32_t camera_id() const noexcept { return camera_id_; }
  std::size_t d_feat() const noexcept { return d_feat_; }
  std::size_t context_width() const noexcept { return d_feat_ + kCodeLength; }
  const CurationStrategy& strategy() const noexcept { return strategy_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t extractor_seed() const noexcept { return extractor_seed_; }
  void set_extractor_seed(std::uint64_t seed) noexcept { extractor_seed_ = seed; }

  std::span<const ContextEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  // Appends keeping sort order; throws InputError if `e` would go before the
  // current tail or has the wrong embedding length.
  void append(ContextEntry e);

  // Rebuilds from arbitrary entries (sorted and capacity-trimmed here).
  void assign(std::vector<ContextEntry> entries);

  friend bool operator==(const LongTermBank&, const LongTermBank&) = default;

 private:
  void evict();

  std::uint32_t camera_id_ = 0;
  std::size_t d_feat_ = 0;
  CurationStrategy strategy_;
  std::size_t capacity_ = kDefaultBankCapacity;
  std::uint64_t extractor_seed_ = 0;
  std::vector<ContextEntry> entries_;
};

// Builds a bank from one camera's time-ordered frames. Throws InputError on
// mixed camera ids or out-of-order frames.
LongTermBank build_long_term(std::span<const FrameDetections> frames,
                             const CurationStrategy& strategy, std::size_t d_feat,
                             std::size_t capacity = kDefaultBankCapacity);

// Symmetric window [time - horizon, time + horizon]; `causal` drops the future half.
struct BankQuery {
  std::int64_t time = 0;
  std::int64_t horizon = 0;  // seconds, >= 0
  bool causal = false;
};

struct BankRows {
  Matrix features;  // m x (d_feat + 9), embedding then code
  std::vector<std::int64_t> times;
  std::vector<std::size_t> entry_indices;
};

BankRows query_bank(const LongTermBank& bank, const BankQuery& q);

// The bank as one dense matrix with sorted row times, for repeated windowed
// lookups without copying. Rows are in bank order.
class BankContext {
 public:
  BankContext() = default;
  explicit BankContext(const LongTermBank& bank);

  std::size_t rows() const noexcept { return features_.rows(); }
  MatrixView features() const noexcept { return features_.view(); }
  std::span<const std::int64_t> times() const noexcept { return times_; }

  // Half-open row range of entries inside the query window.
  std::pair<std::size_t, std::size_t> window(const BankQuery& q) const;
  MatrixView rows_for(const BankQuery& q) const;

 private:
  Matrix features_;
  std::vector<std::int64_t> times_;
};

// Mirrors every entry's code horizontally; embeddings and metadata unchanged.
LongTermBank flip_bank(const LongTermBank& bank);

// Stacked pooled proposal features of up to five consecutive frames.
struct ShortTermMemory {
  Matrix features;                       // (per_frame * frames) x d
  std::vector<std::uint64_t> frame_ids;  // window order
  std::size_t per_frame = 0;

  std::size_t frames() const noexcept { return frame_ids.size(); }
  MatrixView frame_block(std::size_t k) const;
};

inline constexpr std::size_t kMaxShortTermWindow = 5;

// Throws ShapeError on inconsistent proposal counts or depths, or a window
// longer than kMaxShortTermWindow.
ShortTermMemory build_short_term(std::span<const MatrixView> pooled_frames,
                                 std::span<const std::uint64_t> frame_ids);

}  // namespace camctx
