#include "camctx/benchmark.hpp"

#include <algorithm>
#include <sstream>

#include "camctx/baselines.hpp"
#include "camctx/error.hpp"

namespace camctx {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::single: return "single";
    case Method::majvote: return "majvote";
    case Method::stspatial: return "stspatial";
    case Method::sf: return "sf";
    case Method::st: return "st";
    case Method::lt: return "lt";
    case Method::st_lt: return "st+lt";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view text) noexcept {
  if (text == "single") return Method::single;
  if (text == "majvote") return Method::majvote;
  if (text == "stspatial") return Method::stspatial;
  if (text == "sf") return Method::sf;
  if (text == "st") return Method::st;
  if (text == "lt") return Method::lt;
  if (text == "st+lt" || text == "st_lt") return Method::st_lt;
  return std::nullopt;
}

ContextMode model_mode(Method m) noexcept {
  switch (m) {
    case Method::sf: return ContextMode::sf;
    case Method::st: return ContextMode::st;
    case Method::lt: return ContextMode::lt;
    case Method::st_lt: return ContextMode::st_lt;
    default: return ContextMode::single;
  }
}

namespace {

Detection make_detection(const PreparedFrame& f, std::size_t i, const ProposalPrediction& p) {
  Detection d;
  d.frame_id = f.frame_id;
  d.class_id = p.class_id;
  d.score = p.score;
  d.box = f.boxes[i];
  d.box_index = static_cast<std::uint32_t>(i);
  return d;
}

}  // namespace

std::vector<Detection> detect_camera(const DetectorModel& model, const PreparedCamera& cam,
                                     const DetectOptions& opt, std::vector<KeyframeAttention>* attention,
                                     double attention_threshold) {
  std::vector<Detection> out;
  const ContextMode mode = model_mode(opt.method);
  if (mode != ContextMode::single && mode != model.mode)
    throw ConfigError("detect: method " + std::string(to_string(opt.method)) + " needs a model trained in mode " +
                      std::string(to_string(mode)) + ", got " + std::string(to_string(model.mode)));
  // The baselines reuse the classifier of whatever model is given, with context off.
  DetectorModel plain;
  const DetectorModel* m = &model;
  if (mode == ContextMode::single && model.mode != ContextMode::single) {
    plain = model;
    plain.mode = ContextMode::single;
    m = &plain;
  }

  std::vector<std::vector<ProposalPrediction>> single_preds;
  if (opt.method == Method::majvote) {
    single_preds.reserve(cam.frames.size());
    for (const auto& f : cam.frames) single_preds.push_back(predict_from_logits(linear_apply(f.pooled, m->classifier)));
  }

  ShortTermMemory storage;
  for (std::size_t i = 0; i < cam.frames.size(); ++i) {
    const PreparedFrame& f = cam.frames[i];
    std::vector<ProposalPrediction> preds;
    switch (opt.method) {
      case Method::single:
        preds = predict_from_logits(linear_apply(f.pooled, m->classifier));
        break;
      case Method::majvote: {
        const auto [lo, hi] = cam.burst_window(i, opt.short_radius);
        preds = majority_vote(std::span(cam.frames).subspan(lo, hi - lo), std::span(single_preds).subspan(lo, hi - lo),
                              i - lo, m->background());
        break;
      }
      case Method::stspatial: {
        const auto [lo, hi] = cam.burst_window(i, opt.short_radius);
        const Matrix feats = st_spatial_features(std::span(cam.frames).subspan(lo, hi - lo), i - lo);
        preds = predict_from_logits(linear_apply(feats, m->classifier));
        break;
      }
      default: {
        const ModelInput in = keyframe_input(cam, i, mode, opt.horizon, opt.short_radius, false, storage);
        ForwardCache cache;
        preds = predict_from_logits(model_logits(*m, in, attention ? &cache : nullptr));
        if (attention && cache.head.long_used && !cache.head.long_stage.skipped) {
          std::size_t best = preds.size();
          for (std::size_t r = 0; r < preds.size(); ++r)
            if (preds[r].class_id != m->background() && (best == preds.size() || preds[r].score > preds[best].score))
              best = r;
          if (best != preds.size()) {
            AttentionWeights w;
            w.w = cache.head.long_stage.weights;
            w.row_times.assign(in.long_times.begin(), in.long_times.end());
            KeyframeAttention k{f.frame_id, attention_timeline(w, best, f.time, attention_threshold), {}};
            for (double v : w.w.row(best))
              if (v >= attention_threshold) k.weights.push_back(v);
            attention->push_back(std::move(k));
          }
        }
        break;
      }
    }
    for (std::size_t r = 0; r < preds.size(); ++r) out.push_back(make_detection(f, r, preds[r]));
  }
  return out;
}

std::vector<Detection> foreground(std::span<const Detection> dets, int n_classes) {
  std::vector<Detection> out;
  for (const auto& d : dets)
    if (d.class_id >= 0 && d.class_id < n_classes) out.push_back(d);
  return out;
}

BenchmarkConfig BenchmarkConfig::from_config(const KeyValueConfig& cfg) {
  KeyValueConfig trace_part;
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("trace.", 0) == 0) {
      trace_part.set(key.substr(6), value);
    } else if (key.rfind("train.", 0) == 0) {
      // handled by TrainConfig
    } else if (key != "bank.strategy" && key != "bank.capacity" && key != "bank.extractor_seed" &&
               key != "eval.horizons") {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  BenchmarkConfig b;
  b.trace = TraceConfig::from_config(trace_part);
  if (auto s = cfg.get("bank.strategy")) b.strategy = CurationStrategy::parse(*s);
  const auto cap = cfg.get_int("bank.capacity", static_cast<std::int64_t>(b.capacity));
  if (cap <= 0) throw ConfigError("bank.capacity must be positive");
  b.capacity = static_cast<std::size_t>(cap);
  b.extractor_seed = cfg.get_u64("bank.extractor_seed", b.extractor_seed);
  b.train = TrainConfig::from_config(cfg, "train.");
  if (auto h = cfg.get("eval.horizons")) {
    b.horizons.clear();
    std::istringstream in(*h);
    for (std::string item; std::getline(in, item, ',');) {
      const auto first = item.find_first_not_of(' ');
      const auto last = item.find_last_not_of(' ');
      if (first == std::string::npos) throw ConfigError("eval.horizons: empty item");
      b.horizons.push_back(parse_duration(item.substr(first, last - first + 1)));
    }
  }
  return b;
}

BenchmarkConfig BenchmarkConfig::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

std::vector<PreparedCamera> prepare_cameras(const TraceSet& traces, std::uint64_t extractor_seed,
                                            const std::vector<LongTermBank>& banks, bool held_out) {
  const SurrogateExtractor extractor(traces.config, extractor_seed);
  std::vector<PreparedCamera> out;
  for (const auto& cam : traces.cameras) {
    if (cam.held_out != held_out) continue;
    std::optional<LongTermBank> bank;
    for (const auto& b : banks)
      if (b.camera_id() == cam.camera_id) bank = b;
    out.push_back(prepare_camera(cam, extractor, std::move(bank)));
  }
  return out;
}

PreparedWorld prepare_world(const BenchmarkConfig& cfg) { return prepare_world(cfg, cfg.strategy); }

PreparedWorld prepare_world(const BenchmarkConfig& cfg, const CurationStrategy& strategy) {
  PreparedWorld w;
  w.traces.config = cfg.trace;
  w.traces.cameras = generate_trace(cfg.trace);
  const SurrogateExtractor extractor(cfg.trace, cfg.extractor_seed);
  for (const auto& cam : w.traces.cameras) {
    auto prepared = prepare_camera(cam, extractor, extractor.build_bank(cam, strategy, cfg.capacity));
    (cam.held_out ? w.test : w.train).push_back(std::move(prepared));
  }
  return w;
}

DetectorModel train_model(std::span<const PreparedCamera> cameras, ContextMode mode, std::uint32_t n_classes,
                          std::size_t d_feat, std::uint64_t extractor_seed, const TrainConfig& cfg,
                          std::vector<double>* loss_curve) {
  const std::size_t d_attn = cfg.d_attn == 0 ? d_feat : cfg.d_attn;
  DetectorModel init = DetectorModel::init(mode, n_classes, d_feat, d_attn, cfg.seed, cfg.temperature, cfg.attention_scale);
  init.horizon = cfg.horizon;
  init.extractor_seed = extractor_seed;
  auto result = train(std::move(init), cameras, cfg);
  if (loss_curve) *loss_curve = std::move(result.loss_curve);
  return std::move(result.model);
}

std::vector<GroundTruthBox> ground_truth_of(std::span<const PreparedCamera> cameras) {
  std::vector<GroundTruthBox> out;
  for (const auto& c : cameras) out.insert(out.end(), c.ground_truth.begin(), c.ground_truth.end());
  return out;
}

std::vector<Detection> detect_all(const DetectorModel& model, std::span<const PreparedCamera> cameras,
                                  const DetectOptions& opt, std::vector<KeyframeAttention>* attention) {
  std::vector<Detection> out;
  for (const auto& c : cameras) {
    auto d = detect_camera(model, c, opt, attention);
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

EvalReport evaluate_method(const DetectorModel& model, std::span<const PreparedCamera> cameras,
                           const DetectOptions& opt) {
  const auto dets = foreground(detect_all(model, cameras, opt), static_cast<int>(model.n_classes));
  return evaluate(dets, ground_truth_of(cameras), static_cast<int>(model.n_classes));
}

}  // namespace camctx
