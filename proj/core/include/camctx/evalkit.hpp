#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "camctx/encoding.hpp"

namespace camctx {

struct Detection {
  std::uint64_t frame_id = 0;
  int class_id = 0;
  double score = 0.0;
  BoxPx box;
  std::uint32_t box_index = 0;  // position within the frame, last tie-break

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruthBox {
  std::uint64_t frame_id = 0;
  int class_id = 0;
  BoxPx box;
  bool ignore = false;

  friend bool operator==(const GroundTruthBox&, const GroundTruthBox&) = default;
};

// Intersection over union; 0 when the union has no area.
double iou(const BoxPx& a, const BoxPx& b) noexcept;

struct EvalReport {
  double map = 0.0;         // mean AP over classes with ground truth
  double ar_at_1 = 0.0;     // mean per-class recall using each frame's top detection
  double recall_all = 0.0;  // mean per-class recall using every detection
  double iou_threshold = 0.5;
  std::vector<double> class_ap;           // NaN for classes without ground truth
  std::vector<std::size_t> class_ground_truth;
  std::vector<std::size_t> class_detections;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::string config_echo;
};

// PASCAL-style evaluation. Per class, detections are ranked by descending
// score (ties: ascending frame id, then box index) and greedily matched to the
// unmatched same-frame ground truth of highest IoU (ties: lowest index) at
// IoU >= threshold. AP is the all-points interpolated area:
//   AP = (1 / n_gt) * sum over true-positive ranks k of max_{j >= k} precision_j.
// Duplicates are false positives. Throws InputError for class ids outside
// [0, n_classes).
EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruthBox> gts, int n_classes,
                    double iou_threshold = 0.5);

// mAP averaged over IoU thresholds 0.50, 0.55, ..., 0.95.
double map_over_iou_range(std::span<const Detection> dets, std::span<const GroundTruthBox> gts, int n_classes);

// Per-detection outcome of the matching used by evaluate().
enum class MatchOutcome : std::uint8_t { true_positive, false_positive, ignored };
std::vector<MatchOutcome> match_detections(std::span<const Detection> dets,
                                           std::span<const GroundTruthBox> gts, int n_classes,
                                           double iou_threshold = 0.5);

// False positives (unmatched, duplicate or wrong class) counted in `bins`
// equal-width score bins over [0, 1]; a score of exactly 1 lands in the last bin.
std::vector<std::size_t> fp_histogram(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                                      int n_classes, std::size_t bins, double iou_threshold = 0.5);

// Fixed-width histogram of integer values (e.g. time offsets in seconds).
struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<std::size_t> counts;
};
Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

std::string format_report(const EvalReport& report);
// "bin_lo,bin_hi,count" rows with a header line.
std::string histogram_csv(const Histogram& h, const std::string& value_name = "value");
std::string fp_histogram_csv(std::span<const std::size_t> counts);

// Line-delimited text: "frame_id class_id score x_center y_center width height".
// Blank lines and lines starting with '#' are skipped.
std::vector<Detection> read_detections(std::istream& in);
void write_detections(std::ostream& out, std::span<const Detection> dets);
// "frame_id class_id x_center y_center width height [ignore]".
std::vector<GroundTruthBox> read_ground_truth(std::istream& in);
void write_ground_truth(std::ostream& out, std::span<const GroundTruthBox> gts);

}  // namespace camctx
