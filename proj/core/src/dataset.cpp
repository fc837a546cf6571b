#include "camctx/dataset.hpp"

#include <algorithm>

#include "camctx/error.hpp"

namespace camctx {

std::pair<std::size_t, std::size_t> PreparedCamera::burst_window(std::size_t i, std::uint32_t radius) const {
  const auto& key = frames.at(i);
  std::size_t lo = i;
  std::size_t hi = i + 1;
  while (lo > 0 && i - (lo - 1) <= radius && frames[lo - 1].burst == key.burst) --lo;
  while (hi < frames.size() && hi - i <= radius && frames[hi].burst == key.burst) ++hi;
  return {lo, hi};
}

ShortTermMemory PreparedCamera::short_term(std::size_t i, std::uint32_t radius) const {
  const auto [lo, hi] = burst_window(i, radius);
  std::vector<MatrixView> views;
  std::vector<std::uint64_t> ids;
  for (std::size_t j = lo; j < hi; ++j) {
    views.push_back(frames[j].pooled.view());
    ids.push_back(frames[j].frame_id);
  }
  return build_short_term(views, ids);
}

std::vector<GroundTruthBox> ground_truth_of(const CameraTrace& cam) {
  std::vector<GroundTruthBox> out;
  for (const auto& f : cam.frames)
    for (const auto& inst : f.instances) {
      if (inst.distractor) continue;
      out.push_back(GroundTruthBox{f.frame_id, inst.class_id, inst.box, false});
    }
  return out;
}

PreparedCamera prepare_camera(const CameraTrace& cam, const SurrogateExtractor& extractor,
                              std::optional<LongTermBank> bank) {
  PreparedCamera pc;
  pc.camera_id = cam.camera_id;
  pc.held_out = cam.held_out;
  pc.frames.reserve(cam.frames.size());
  for (std::size_t i = 0; i < cam.frames.size(); ++i) {
    auto ex = extractor.extract(cam, i);
    PreparedFrame pf;
    pf.pooled = std::move(ex.batch.pooled);
    pf.boxes = std::move(ex.batch.boxes);
    pf.scores = std::move(ex.batch.scores);
    pf.labels = std::move(ex.labels);
    pf.kinds = std::move(ex.kinds);
    pf.time = cam.frames[i].time;
    pf.frame_id = cam.frames[i].frame_id;
    pf.burst = cam.frames[i].burst;
    pf.burst_position = cam.frames[i].burst_position;
    pc.frames.push_back(std::move(pf));
  }
  if (bank) {
    if (bank->camera_id() != cam.camera_id)
      throw InputError("bank for camera " + std::to_string(bank->camera_id()) + " paired with camera " +
                       std::to_string(cam.camera_id));
    if (bank->d_feat() != extractor.d_feat()) throw InputError("bank depth does not match the extractor");
    pc.bank = std::move(*bank);
  } else {
    pc.bank = LongTermBank(cam.camera_id, extractor.d_feat(), CurationStrategy::top(1));
  }
  pc.context = BankContext(pc.bank);
  pc.flipped_context = BankContext(flip_bank(pc.bank));
  pc.ground_truth = ground_truth_of(cam);
  return pc;
}

}  // namespace camctx
