#include "camctx/baselines.hpp"

#include <cmath>
#include <map>
#include <optional>

#include "camctx/error.hpp"
#include "camctx/evalkit.hpp"

namespace camctx {

namespace {

// Index of the proposal in `f` overlapping `box` best, if the overlap reaches `thr`.
std::optional<std::size_t> best_overlap(const BoxPx& box, const PreparedFrame& f, double thr) {
  double best = -1.0;
  std::size_t best_r = 0;
  for (std::size_t r = 0; r < f.boxes.size(); ++r) {
    const double o = iou(box, f.boxes[r]);
    if (o > best) {
      best = o;
      best_r = r;
    }
  }
  if (best < thr) return std::nullopt;
  return best_r;
}

}  // namespace

std::vector<ProposalPrediction> majority_vote(std::span<const PreparedFrame> frames,
                                              std::span<const std::vector<ProposalPrediction>> window,
                                              std::size_t key, int background, double threshold,
                                              double iou_threshold) {
  if (key >= window.size()) throw ParameterError("majority_vote: keyframe outside window");
  if (frames.size() != window.size()) throw ShapeError("majority_vote: frames and predictions differ in length");
  const PreparedFrame& kf = frames[key];
  std::vector<ProposalPrediction> out = window[key];
  if (out.size() != kf.boxes.size()) throw ShapeError("majority_vote: keyframe predictions != proposals");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].class_id == background) continue;
    std::map<int, std::size_t> votes;
    for (std::size_t j = 0; j < window.size(); ++j) {
      std::optional<std::size_t> r = i;
      if (j != key) r = best_overlap(kf.boxes[i], frames[j], iou_threshold);
      if (!r || *r >= window[j].size()) continue;
      const auto& p = window[j][*r];
      if (p.class_id != background && p.score >= threshold) ++votes[p.class_id];
    }
    if (votes.empty()) continue;
    std::size_t top = 0;
    for (const auto& [cls, n] : votes) top = std::max(top, n);
    const auto own = votes.find(out[i].class_id);
    if (own != votes.end() && own->second == top) continue;
    for (const auto& [cls, n] : votes)
      if (n == top) {
        out[i].class_id = cls;
        break;
      }
  }
  return out;
}

Matrix st_spatial_features(std::span<const PreparedFrame> window, std::size_t key, double iou_threshold) {
  if (key >= window.size()) throw ParameterError("st_spatial: keyframe outside window");
  const PreparedFrame& kf = window[key];
  const std::size_t d = kf.pooled.cols();
  Matrix out(kf.pooled.rows(), d);
  for (std::size_t i = 0; i < kf.pooled.rows(); ++i) {
    std::vector<double> acc(kf.pooled.row(i).begin(), kf.pooled.row(i).end());
    double total = 1.0;  // the keyframe itself, dt = 0
    for (std::size_t j = 0; j < window.size(); ++j) {
      if (j == key) continue;
      const PreparedFrame& f = window[j];
      if (f.pooled.cols() != d) throw ShapeError("st_spatial: window depth mismatch");
      const auto match = best_overlap(kf.boxes[i], f, iou_threshold);
      if (!match) continue;
      const std::size_t best_r = *match;
      const double a = 1.0 / (1.0 + std::abs(static_cast<double>(f.time - kf.time)));
      const auto row = f.pooled.row(best_r);
      for (std::size_t c = 0; c < d; ++c) acc[c] += a * row[c];
      total += a;
    }
    for (std::size_t c = 0; c < d; ++c) out(i, c) = acc[c] / total;
  }
  return out;
}

}  // namespace camctx
