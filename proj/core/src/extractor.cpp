#include "camctx/extractor.hpp"

#include <algorithm>
#include <cmath>

#include "camctx/error.hpp"
#include "camctx/rng.hpp"

namespace camctx {

namespace {

std::vector<double> normal_vector(Rng& rng, std::size_t d, double scale) {
  std::vector<double> v(d);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace

std::vector<ScoredDetection> ExtractedFrame::detections() const {
  std::vector<ScoredDetection> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ScoredDetection d;
    const auto row = embeddings.row(i);
    d.embedding.assign(row.begin(), row.end());
    d.box = batch.boxes[i];
    d.score = batch.scores[i];
    out.push_back(std::move(d));
  }
  return out;
}

SurrogateExtractor::SurrogateExtractor(const TraceConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  Rng rng(derive_seed(seed_, {0x9e07}));
  for (std::uint32_t c = 0; c < cfg_.n_classes; ++c) class_prototypes_.push_back(normal_vector(rng, cfg_.d_feat, 1.0));
  background_base_ = normal_vector(rng, cfg_.d_feat, 1.0);
}

std::vector<double> SurrogateExtractor::distractor_prototype(const CameraTrace& cam, std::size_t distractor) const {
  Rng rng(derive_seed(seed_, {0xd157, cam.camera_id, distractor}));
  const auto& look = class_prototype(cam.distractor_lookalike.at(distractor));
  const double a = cfg_.distractor_likeness;
  const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
  auto v = normal_vector(rng, cfg_.d_feat, 1.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * look[i] + b * v[i];
  return v;
}

std::vector<double> SurrogateExtractor::background_prototype(std::uint32_t camera) const {
  Rng rng(derive_seed(seed_, {0xb6, camera}));
  auto v = normal_vector(rng, cfg_.d_feat, 0.5);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += background_base_[i];
  return v;
}

ExtractedFrame SurrogateExtractor::extract(const CameraTrace& cam, std::size_t frame_position) const {
  const Frame& frame = cam.frames.at(frame_position);
  const std::size_t d = cfg_.d_feat;
  const std::size_t n = cfg_.n_proposals;
  const std::size_t g = cfg_.grid;
  Rng rng(derive_seed(seed_, {0xf4a3e, cam.camera_id, frame.frame_index}));

  std::vector<std::vector<double>> embeddings;
  std::vector<BoxPx> boxes;
  std::vector<double> scores;
  ExtractedFrame out;

  // objects first, then distractors, then background proposals fill the rest
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < frame.instances.size(); ++i)
    if (!frame.instances[i].distractor) order.push_back(i);
  for (std::size_t i = 0; i < frame.instances.size(); ++i)
    if (frame.instances[i].distractor) order.push_back(i);

  for (std::size_t idx : order) {
    if (embeddings.size() == n) break;
    const Instance& inst = frame.instances[idx];
    Rng visit(derive_seed(seed_, {0x715, cam.camera_id, frame.burst, inst.individual, inst.distractor ? 1u : 0u}));
    std::vector<double> e;
    if (inst.distractor) {
      e = distractor_prototype(cam, inst.individual);
      for (auto& x : e) x += cfg_.visit_noise * visit.normal();
      for (auto& x : e) x += cfg_.feature_noise * rng.normal();
      scores.push_back(rng.uniform(0.35, 0.85));
      out.labels.push_back(background_label());
      out.kinds.push_back(ProposalKind::distractor);
    } else {
      e = class_prototype(inst.class_id);
      Rng individual(derive_seed(seed_, {0x1dd, cam.camera_id, inst.individual}));
      for (auto& x : e) x += cfg_.instance_noise * individual.normal();
      for (auto& x : e) x += cfg_.visit_noise * visit.normal();
      for (auto& x : e) x += cfg_.feature_noise * rng.normal();
      scores.push_back(rng.uniform(0.55, 0.98));
      out.labels.push_back(inst.class_id);
      out.kinds.push_back(ProposalKind::object);
    }
    embeddings.push_back(std::move(e));
    boxes.push_back(inst.box);
    out.instance_index.push_back(static_cast<int>(idx));
  }

  const auto bg = background_prototype(cam.camera_id);
  while (embeddings.size() < n) {
    std::vector<double> e = bg;
    for (auto& x : e) x += cfg_.background_noise * rng.normal();
    BoxPx b;
    b.image_width = cfg_.image_width;
    b.image_height = cfg_.image_height;
    b.width = rng.uniform(0.06, 0.3) * cfg_.image_width;
    b.height = rng.uniform(0.06, 0.3) * cfg_.image_height;
    b.x_center = rng.uniform(0.5 * b.width + 1.0, cfg_.image_width - 0.5 * b.width - 1.0);
    b.y_center = rng.uniform(0.5 * b.height + 1.0, cfg_.image_height - 0.5 * b.height - 1.0);
    embeddings.push_back(std::move(e));
    boxes.push_back(b);
    scores.push_back(rng.uniform(0.01, 0.3));
    out.labels.push_back(background_label());
    out.kinds.push_back(ProposalKind::background);
    out.instance_index.push_back(-1);
  }

  // Cropped features: the embedding on every cell plus a zero-mean spatial texture.
  Tensor4 a(n, g, g, d);
  const double texture = 0.25 * cfg_.feature_noise;
  std::vector<double> pattern(g * g);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      double mean = 0.0;
      for (auto& p : pattern) {
        p = texture * rng.normal();
        mean += p;
      }
      mean /= static_cast<double>(pattern.size());
      for (std::size_t y = 0; y < g; ++y)
        for (std::size_t x = 0; x < g; ++x) a.at(i, y, x, c) = embeddings[i][c] + (pattern[y * g + x] - mean);
    }
  }
  out.embeddings = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) std::copy(embeddings[i].begin(), embeddings[i].end(), out.embeddings.row(i).begin());
  out.batch = ProposalBatch::from_features(std::move(a), std::move(boxes), std::move(scores), frame.timestamp());
  return out;
}

LongTermBank SurrogateExtractor::build_bank(const CameraTrace& cam, const CurationStrategy& strategy,
                                            std::size_t capacity) const {
  std::vector<FrameDetections> frames;
  frames.reserve(cam.frames.size());
  for (std::size_t i = 0; i < cam.frames.size(); ++i) {
    const Frame& f = cam.frames[i];
    FrameDetections fd;
    fd.camera_id = cam.camera_id;
    fd.frame_index = f.frame_index;
    fd.frame_id = f.frame_id;
    fd.timestamp = f.timestamp();
    fd.detections = extract(cam, i).detections();
    fd.has_object = f.has_object();
    frames.push_back(std::move(fd));
  }
  LongTermBank bank = build_long_term(frames, strategy, cfg_.d_feat, capacity);
  if (frames.empty()) bank = LongTermBank(cam.camera_id, cfg_.d_feat, strategy, capacity);
  bank.set_extractor_seed(seed_);
  return bank;
}

}  // namespace camctx
