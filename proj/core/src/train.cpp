#include "camctx/train.hpp"

#include <cmath>
#include <string>

#include "camctx/error.hpp"
#include "camctx/optim.hpp"
#include "camctx/rng.hpp"

namespace camctx {

void TrainConfig::validate() const {
  if (steps == 0) throw ConfigError("train: steps must be positive");
  if (clips_per_batch == 0) throw ConfigError("train: clips_per_batch must be positive");
  if (clip_length == 0 || clip_length > kMaxShortTermWindow)
    throw ConfigError("train: clip_length must be in 1..5");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train: bad learning_rate");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be >= 0");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
    throw ConfigError("train: flip_probability must be in [0, 1]");
  if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be >= 0");
  if (horizon < 0) throw ConfigError("train: horizon must be >= 0");
  if (2 * short_radius + 1 > kMaxShortTermWindow) throw ConfigError("train: short_radius must be at most 2");
  if (!(attention_scale >= 0.0)) throw ConfigError("train: attention_scale must be >= 0");
  if (!(key_query_lr_scale >= 0.0)) throw ConfigError("train: key_query_lr_scale must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("train: temperature must be positive");
}

std::vector<std::string_view> TrainConfig::known_keys() {
  return {"steps",      "clips_per_batch", "clip_length", "learning_rate", "momentum", "weight_decay",
          "flip_probability", "clip_norm", "horizon", "short_radius", "d_attn", "temperature", "attention_scale",
          "key_query_lr_scale", "seed"};
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg, std::string_view prefix) {
  const std::string p(prefix);
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind(p, 0) != 0) continue;
    const auto rest = std::string_view(key).substr(p.size());
    bool ok = false;
    for (auto k : known_keys()) ok = ok || k == rest;
    if (!ok) throw ConfigError("unknown config key '" + key + "'");
  }
  TrainConfig c;
  auto u32 = [&](std::string_view k, std::uint32_t v) {
    const auto x = cfg.get_int(p + std::string(k), v);
    if (x < 0 || x > 0xffffffffLL) throw ConfigError("config key '" + p + std::string(k) + "' out of range");
    return static_cast<std::uint32_t>(x);
  };
  c.steps = u32("steps", c.steps);
  c.clips_per_batch = u32("clips_per_batch", c.clips_per_batch);
  c.clip_length = u32("clip_length", c.clip_length);
  c.learning_rate = cfg.get_real(p + "learning_rate", c.learning_rate);
  c.momentum = cfg.get_real(p + "momentum", c.momentum);
  c.weight_decay = cfg.get_real(p + "weight_decay", c.weight_decay);
  c.flip_probability = cfg.get_real(p + "flip_probability", c.flip_probability);
  c.clip_norm = cfg.get_real(p + "clip_norm", c.clip_norm);
  if (auto h = cfg.get(p + "horizon")) c.horizon = parse_duration(*h);
  c.short_radius = u32("short_radius", c.short_radius);
  c.d_attn = u32("d_attn", c.d_attn);
  c.temperature = cfg.get_real(p + "temperature", c.temperature);
  c.attention_scale = cfg.get_real(p + "attention_scale", c.attention_scale);
  c.key_query_lr_scale = cfg.get_real(p + "key_query_lr_scale", c.key_query_lr_scale);
  c.seed = cfg.get_u64(p + "seed", c.seed);
  c.validate();
  return c;
}

ModelInput keyframe_input(const PreparedCamera& cam, std::size_t i, ContextMode mode, std::int64_t horizon,
                          std::uint32_t short_radius, bool flipped, ShortTermMemory& short_storage) {
  const PreparedFrame& f = cam.frames.at(i);
  ModelInput in;
  in.pooled = f.pooled.view();
  if (mode == ContextMode::sf) {
    short_storage = cam.short_term(i, 0);
    in.short_term = &short_storage;
  } else if (mode == ContextMode::st || mode == ContextMode::st_lt) {
    short_storage = cam.short_term(i, short_radius);
    in.short_term = &short_storage;
  }
  if (mode == ContextMode::lt || mode == ContextMode::st_lt) {
    const BankContext& ctx = flipped ? cam.flipped_context : cam.context;
    const BankQuery q{f.time, horizon, false};
    const auto [lo, hi] = ctx.window(q);
    in.long_rows = ctx.features().row_range(lo, hi);
    in.long_times = ctx.times().subspan(lo, hi - lo);
  }
  return in;
}

TrainResult train(DetectorModel model, std::span<const PreparedCamera> cameras, const TrainConfig& cfg,
                  const std::function<void(std::uint32_t, double)>& progress) {
  cfg.validate();
  model.validate();
  std::vector<std::pair<std::size_t, std::size_t>> frames;  // (camera, frame)
  for (std::size_t c = 0; c < cameras.size(); ++c)
    for (std::size_t i = 0; i < cameras[c].frames.size(); ++i) frames.emplace_back(c, i);
  if (frames.empty()) throw InputError("train: no frames");

  TrainResult result;
  auto params = model.parameters();
  OptimState opt = OptimState::for_parameters(params, cfg.learning_rate, cfg.momentum, cfg.weight_decay);
  opt.lr_scale.assign(params.size(), 1.0);
  for (auto* stage : {&model.short_params, &model.long_params})
    for (auto* map : {&stage->key, &stage->query})
      for (auto s : map->parameters())
        for (std::size_t t = 0; t < params.size(); ++t)
          if (params[t].data() == s.data()) opt.lr_scale[t] = cfg.key_query_lr_scale;
  DetectorModel grad = DetectorModel::zeros_like(model);
  Rng rng(derive_seed(cfg.seed, {0x7a1}));
  ShortTermMemory short_storage;

  for (std::uint32_t step = 0; step < cfg.steps; ++step) {
    for (auto g : grad.parameters()) std::fill(g.begin(), g.end(), 0.0);
    double loss = 0.0;
    std::size_t proposals = 0;
    for (std::uint32_t clip = 0; clip < cfg.clips_per_batch; ++clip) {
      const auto [c, start] = frames[rng.below(frames.size())];
      const bool flipped = rng.bernoulli(cfg.flip_probability);
      const PreparedCamera& cam = cameras[c];
      std::size_t i = start;
      for (std::uint32_t k = 0; k < cfg.clip_length; ++k) {
        if (k > 0 && i + 1 < cam.frames.size() && cam.frames[i + 1].burst == cam.frames[start].burst) ++i;
        const ModelInput in = keyframe_input(cam, i, model.mode, cfg.horizon, cfg.short_radius, flipped,
                                             short_storage);
        loss += model_loss_and_grad(model, in, cam.frames[i].labels, grad);
        proposals += cam.frames[i].labels.size();
      }
    }
    const double scale = 1.0 / static_cast<double>(proposals);
    const double mean_loss = loss * scale;
    if (!std::isfinite(mean_loss)) throw TrainingError("train: non-finite loss", step);
    auto grads_mut = grad.parameters();
    double norm2 = 0.0;
    for (auto g : grads_mut)
      for (double& v : g) {
        v *= scale;
        norm2 += v * v;
      }
    if (cfg.clip_norm > 0.0 && norm2 > cfg.clip_norm * cfg.clip_norm) {
      const double shrink = cfg.clip_norm / std::sqrt(norm2);
      for (auto g : grads_mut)
        for (double& v : g) v *= shrink;
    }
    const auto grads = std::as_const(grad).parameters();
    sgd_step(params, grads, opt);
    result.loss_curve.push_back(mean_loss);
    if (progress) progress(step, mean_loss);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace camctx
