#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"

#include "camctx/baselines.hpp"
#include "camctx/binio.hpp"
#include "camctx/dataset.hpp"
#include "camctx/detector.hpp"
#include "camctx/error.hpp"
#include "camctx/train.hpp"

using namespace camctx;

namespace {

TraceConfig small_config() {
  TraceConfig c;
  c.n_cameras = 2;
  c.test_cameras = 1;
  c.duration_days = 4;
  c.seed = 11;
  return c;
}

TraceConfig quiet_config() {
  TraceConfig c = small_config();
  c.n_cameras = 1;
  c.test_cameras = 0;
  c.duration_days = 6;
  c.instance_noise = 0.0;
  c.visit_noise = 0.0;
  c.feature_noise = 0.0;
  c.background_noise = 0.0;
  return c;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_SUITE("synthcam") {

TEST_CASE("trace generation is deterministic and well formed") {
  const auto cfg = small_config();
  const auto a = generate_trace(cfg);
  CHECK(a == generate_trace(cfg));
  auto other = cfg;
  other.seed = 12;
  CHECK_FALSE(a == generate_trace(other));
  REQUIRE(a.size() == 2);
  CHECK_FALSE(a[0].held_out);
  CHECK(a[1].held_out);
  for (const auto& cam : a) {
    REQUIRE_FALSE(cam.frames.empty());
    for (std::size_t i = 0; i < cam.frames.size(); ++i) {
      const auto& f = cam.frames[i];
      CHECK(f.frame_index == i);
      CHECK(f.frame_id == make_frame_id(cam.camera_id, i));
      CHECK(f.burst_length >= 1);
      CHECK(f.burst_length <= 10);
      CHECK(f.burst_position < f.burst_length);
      CHECK(f.timestamp().to_epoch_seconds() == f.time);
      if (i == 0) continue;
      const auto& prev = cam.frames[i - 1];
      CHECK(f.time > prev.time);
      if (f.burst == prev.burst) {
        CHECK(f.time == prev.time + 1);
        CHECK(f.burst_position == prev.burst_position + 1);
      } else {
        CHECK(f.burst_position == 0);
        CHECK(prev.burst_position + 1 == prev.burst_length);
      }
      for (const auto& inst : f.instances) CHECK(inst.box.valid());
    }
  }
}

TEST_CASE("empty-frame fraction") {
  TraceConfig cfg;  // defaults, 30 days
  CHECK(std::abs(empty_frame_fraction(generate_trace(cfg)) - 0.75) <= 0.02);
  auto all_empty = small_config();
  all_empty.empty_fraction = 1.0;
  for (const auto& cam : generate_trace(all_empty))
    for (const auto& f : cam.frames)
      for (const auto& inst : f.instances) CHECK(inst.distractor);
}

TEST_CASE("objects follow daily schedules") {
  auto cfg = quiet_config();
  cfg.species_per_camera = 1;
  cfg.stray_fraction = 0.0;
  cfg.duration_days = 20;
  const auto cam = generate_trace(cfg).front();
  const double scheduled = cam.visit_hours.front();
  std::size_t seen = 0;
  for (const auto& f : cam.frames) {
    if (!f.has_object() || f.burst_position != 0) continue;
    const auto t = f.timestamp();
    double dh = std::abs(t.hour + t.minute / 60.0 - scheduled);
    dh = std::min(dh, 24.0 - dh);
    CHECK(dh <= 6 * cfg.visit_jitter_hours);
    ++seen;
  }
  CHECK(seen > 10);
}

TEST_CASE("degenerate configs are rejected") {
  auto cfg = small_config();
  cfg.burst_max = 11;
  CHECK_THROWS_AS(generate_trace(cfg), ConfigError);
  cfg = small_config();
  cfg.empty_fraction = 1.5;
  CHECK_THROWS_AS(generate_trace(cfg), ConfigError);
  cfg = small_config();
  cfg.n_cameras = 0;
  CHECK_THROWS_AS(generate_trace(cfg), ConfigError);
  cfg = small_config();
  cfg.duration_days = 0.0;
  CHECK_THROWS_AS(generate_trace(cfg), ConfigError);
}

TEST_CASE("config text round trip") {
  auto cfg = small_config();
  cfg.visit_noise = 0.25;
  cfg.distractor_presence = 0.4;
  CHECK(TraceConfig::from_config(KeyValueConfig::parse(cfg.to_config_text())) == cfg);
  CHECK_THROWS_AS(TraceConfig::from_config(KeyValueConfig::parse("bogus = 1\n")), ConfigError);
}

TEST_CASE("trace file round trip and corruption") {
  TraceSet set{small_config(), generate_trace(small_config())};
  const auto bytes = encode_trace(set);
  CHECK(decode_trace(bytes) == set);
  CHECK(encode_trace(decode_trace(bytes)) == bytes);
  auto bad = bytes;
  bad[bad.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(decode_trace(bad), FormatError);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(decode_trace(bad), FormatError);
  bad = bytes;
  bad[0] = 'x';
  CHECK_THROWS_AS(decode_trace(bad), FormatError);
}

TEST_CASE("noiseless extraction returns prototypes") {
  const auto cfg = quiet_config();
  const auto cam = generate_trace(cfg).front();
  const SurrogateExtractor ex(cfg, 5);
  std::vector<double> distractor_seen;
  std::size_t objects = 0;
  for (std::size_t i = 0; i < cam.frames.size(); ++i) {
    const auto out = ex.extract(cam, i);
    CHECK(out.batch.size() == cfg.n_proposals);
    for (std::size_t p = 0; p < out.kinds.size(); ++p) {
      const auto row = out.embeddings.row(p);
      if (out.kinds[p] == ProposalKind::object) {
        const auto& proto = ex.class_prototype(out.labels[p]);
        CHECK(std::equal(row.begin(), row.end(), proto.begin()));
        ++objects;
      } else if (out.kinds[p] == ProposalKind::distractor) {
        if (distractor_seen.empty()) distractor_seen.assign(row.begin(), row.end());
        else if (cam.frames[i].instances[static_cast<std::size_t>(out.instance_index[p])].individual == 0)
          CHECK(cosine(row, distractor_seen) > 0.99);
      } else {
        CHECK(out.labels[p] == ex.background_label());
        CHECK(out.batch.scores[p] < 0.35);
      }
    }
  }
  CHECK(objects > 0);
}

TEST_CASE("extraction is frozen and position independent") {
  const auto cfg = small_config();
  auto cams = generate_trace(cfg);
  const SurrogateExtractor ex(cfg, 9);
  const auto a = ex.extract(cams[0], 3);
  const auto b = ex.extract(cams[0], 3);
  CHECK(a.embeddings == b.embeddings);
  CHECK(a.batch.features == b.batch.features);
  // moving every box leaves embeddings unchanged
  auto moved = cams[0];
  for (auto& inst : moved.frames[3].instances) inst.box = inst.box.flipped();
  CHECK(ex.extract(moved, 3).embeddings == a.embeddings);
  // pooled view equals the exact embeddings up to rounding
  for (std::size_t i = 0; i < a.embeddings.size(); ++i)
    CHECK(std::abs(a.batch.pooled.values()[i] - a.embeddings.values()[i]) <= 1e-12);
}

TEST_CASE("training: lr 0 freezes, same seed repeats, separable SF fits") {
  auto cfg = quiet_config();
  cfg.instance_noise = 0.2;
  cfg.feature_noise = 0.2;
  cfg.distractors_per_camera = 0;
  const auto trace = generate_trace(cfg);
  const SurrogateExtractor ex(cfg, 5);
  std::vector<PreparedCamera> cams{prepare_camera(trace[0], ex, ex.build_bank(trace[0], CurationStrategy::top(1)))};

  TrainConfig tc;
  tc.steps = 20;
  tc.learning_rate = 0.0;
  const auto init = DetectorModel::init(ContextMode::st_lt, cfg.n_classes, cfg.d_feat, cfg.d_feat, 1);
  CHECK(train(init, cams, tc).model == init);

  tc.learning_rate = 0.05;
  const auto r1 = train(init, cams, tc);
  const auto r2 = train(init, cams, tc);
  CHECK(r1.model == r2.model);
  CHECK(r1.loss_curve == r2.loss_curve);
  for (double l : r1.loss_curve) CHECK(std::isfinite(l));

  tc.steps = 200;
  const auto sf = train(DetectorModel::init(ContextMode::sf, cfg.n_classes, cfg.d_feat, cfg.d_feat, 2), cams, tc);
  CHECK(sf.loss_curve.back() < sf.loss_curve.front());
  std::size_t right = 0, total = 0;
  ShortTermMemory storage;
  for (std::size_t i = 0; i < cams[0].frames.size(); ++i) {
    const auto in = keyframe_input(cams[0], i, ContextMode::sf, 0, 0, false, storage);
    const auto preds = predict(sf.model, in);
    for (std::size_t p = 0; p < preds.size(); ++p) {
      if (cams[0].frames[i].kinds[p] != ProposalKind::object) continue;
      right += preds[p].class_id == cams[0].frames[i].labels[p];
      ++total;
    }
  }
  REQUIRE(total > 0);
  CHECK(static_cast<double>(right) / static_cast<double>(total) > 0.95);
}

TEST_CASE("training divergence reports the step") {
  const auto cfg = small_config();
  const auto trace = generate_trace(cfg);
  const SurrogateExtractor ex(cfg, 5);
  std::vector<PreparedCamera> cams{prepare_camera(trace[0], ex)};
  auto model = DetectorModel::init(ContextMode::single, cfg.n_classes, cfg.d_feat, cfg.d_feat, 1);
  model.classifier.weight(0, 0) = std::nan("");
  TrainConfig tc;
  tc.steps = 3;
  try {
    train(model, cams, tc);
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    CHECK(e.step() == 0);
  }
}

TEST_CASE("detect: tie-break and empty-memory fallback") {
  Rng rng(4);
  const Matrix pooled = oracle::random_matrix(rng, 3, 6);
  auto model = DetectorModel::init(ContextMode::lt, 3, 6, 6, 1);
  for (auto& v : model.classifier.weight.values()) v = 0.0;
  for (auto& v : model.classifier.bias) v = 0.0;
  for (const auto& p : predict(model, ModelInput{pooled, nullptr, Matrix(0, 15), {}})) {
    CHECK(p.class_id == 0);
    CHECK(p.score == doctest::Approx(0.25));
  }
  model = DetectorModel::init(ContextMode::lt, 3, 6, 6, 1);
  oracle::randomize(model.long_params, rng, 0.5);
  const Matrix logits = model_logits(model, ModelInput{pooled, nullptr, Matrix(0, 15), {}});
  CHECK(logits == linear_apply(pooled, model.classifier));
  for (auto mode : {ContextMode::sf, ContextMode::st, ContextMode::st_lt}) {
    auto m = DetectorModel::init(mode, 3, 6, 6, 2);
    CHECK(m.classifier.d_out() == 4);
    CHECK(m.background() == 3);
  }
}

TEST_CASE("model file round trip and corruption") {
  auto model = DetectorModel::init(ContextMode::st_lt, 4, 5, 3, 8);
  model.horizon = 86400;
  model.extractor_seed = 77;
  const auto bytes = encode_model(model);
  CHECK(decode_model(bytes) == model);
  auto bad = bytes;
  bad[bytes.size() - 3] ^= 1;
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_model(bad), FormatError);
}

TEST_CASE("baselines degenerate to the single frame") {
  const auto cfg = small_config();
  const auto trace = generate_trace(cfg);
  const SurrogateExtractor ex(cfg, 5);
  const auto cam = prepare_camera(trace[0], ex);
  const auto& f = cam.frames[0];
  // a window of one frame
  const Matrix st = st_spatial_features(std::span(cam.frames).subspan(0, 1), 0);
  CHECK(st == f.pooled);
  const auto model = DetectorModel::init(ContextMode::single, cfg.n_classes, cfg.d_feat, cfg.d_feat, 3);
  const ModelInput in{f.pooled, nullptr, {}, {}};
  const std::vector<std::vector<ProposalPrediction>> window{predict(model, in)};
  const auto voted = majority_vote(std::span(cam.frames).subspan(0, 1), window, 0, model.background());
  REQUIRE(voted.size() == window[0].size());
  for (std::size_t i = 0; i < voted.size(); ++i) {
    CHECK(voted[i].class_id == window[0][i].class_id);
    CHECK(voted[i].score == window[0][i].score);
  }
}

TEST_CASE("majority vote over confident, co-located predictions") {
  using P = ProposalPrediction;
  // two proposals per frame at fixed, disjoint places
  std::vector<PreparedFrame> frames(4);
  for (auto& f : frames) f.boxes = {BoxPx{100, 100, 40, 40, 640, 480}, BoxPx{400, 300, 40, 40, 640, 480}};
  const std::vector<std::vector<P>> window{
      {{1, 0.9}, {0, 0.9}}, {{2, 0.8}, {3, 0.9}}, {{2, 0.7}, {0, 0.2}}, {{0, 0.4}, {3, 0.9}}};
  // first place: confident votes 1, 2, 2 -> 2; the 0 at 0.4 is not confident
  const auto v = majority_vote(frames, window, 0, 3);
  CHECK(v[0].class_id == 2);
  CHECK(v[0].score == 0.9);
  // second place: the only confident non-background vote is the keyframe's own
  CHECK(v[1].class_id == 0);
  // background predictions keep their class
  CHECK(majority_vote(frames, window, 1, 3)[1].class_id == 3);

  // a tie that includes the keyframe's own class keeps it
  const std::vector<PreparedFrame> two(frames.begin(), frames.begin() + 2);
  const std::vector<std::vector<P>> tie{{{1, 0.9}, {3, 0.1}}, {{2, 0.9}, {3, 0.1}}};
  CHECK(majority_vote(two, tie, 0, 3)[0].class_id == 1);
  CHECK(majority_vote(two, tie, 1, 3)[0].class_id == 2);
  // a tie without it goes to the lowest class
  std::vector<PreparedFrame> three(frames.begin(), frames.begin() + 3);
  const std::vector<std::vector<P>> tie3{{{4, 0.3}, {3, 0.1}}, {{2, 0.9}, {3, 0.1}}, {{1, 0.9}, {3, 0.1}}};
  CHECK(majority_vote(three, tie3, 0, 5)[0].class_id == 1);
}

TEST_CASE("st-spatial weights fall off with time distance") {
  PreparedFrame a, b;
  a.pooled = Matrix(1, 2);
  b.pooled = Matrix(1, 2);
  a.pooled(0, 0) = 1.0;
  b.pooled(0, 1) = 1.0;
  a.boxes = b.boxes = {BoxPx{50, 50, 20, 20, 640, 480}};
  a.scores = b.scores = {0.9};
  a.time = 100;
  b.time = 101;
  const PreparedFrame frames[] = {a, b};
  const Matrix f = st_spatial_features(frames, 0);
  CHECK(f(0, 0) == doctest::Approx(1.0 / 1.5));
  CHECK(f(0, 1) == doctest::Approx(0.5 / 1.5));
  PreparedFrame moved = b;
  moved.boxes[0].x_center = 400;  // no overlap: skipped
  const PreparedFrame far[] = {a, moved};
  CHECK(st_spatial_features(far, 0) == a.pooled);
}

}  // TEST_SUITE
