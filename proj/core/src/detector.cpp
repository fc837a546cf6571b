#include "camctx/detector.hpp"

#include <cmath>
#include <cstring>

#include "camctx/binio.hpp"
#include "camctx/error.hpp"

namespace camctx {

std::string_view to_string(ContextMode mode) noexcept {
  switch (mode) {
    case ContextMode::single: return "single";
    case ContextMode::sf: return "sf";
    case ContextMode::st: return "st";
    case ContextMode::lt: return "lt";
    case ContextMode::st_lt: return "st+lt";
  }
  return "?";
}

std::optional<ContextMode> parse_context_mode(std::string_view text) noexcept {
  if (text == "single") return ContextMode::single;
  if (text == "sf") return ContextMode::sf;
  if (text == "st") return ContextMode::st;
  if (text == "lt") return ContextMode::lt;
  if (text == "st+lt" || text == "st_lt") return ContextMode::st_lt;
  return std::nullopt;
}

std::optional<HeadMode> head_mode(ContextMode mode) noexcept {
  switch (mode) {
    case ContextMode::single: return std::nullopt;
    case ContextMode::sf: return HeadMode::sf;
    case ContextMode::st: return HeadMode::st;
    case ContextMode::lt: return HeadMode::lt;
    case ContextMode::st_lt: return HeadMode::st_lt;
  }
  return std::nullopt;
}

DetectorModel DetectorModel::init(ContextMode mode, std::uint32_t n_classes, std::size_t d_feat,
                                  std::size_t d_attn, std::uint64_t seed, double temperature, double attention_scale) {
  if (n_classes == 0 || d_feat == 0 || d_attn == 0) throw ParameterError("model: zero dimension");
  DetectorModel m;
  m.mode = mode;
  m.n_classes = n_classes;
  Rng rng(derive_seed(seed, {0x5eed, 1}));
  m.short_params = AttentionParams::init(d_feat, d_feat, d_attn, rng, temperature);
  m.long_params = AttentionParams::init(d_feat, d_feat + kCodeLength, d_attn, rng, temperature);
  m.classifier = LinearMap::glorot(d_feat, n_classes + 1, rng);
  // Start as the single-frame model with soft similarity attention: k, q and
  // v copy the embedding (code columns off), f is zero.
  for (AttentionParams* p : {&m.short_params, &m.long_params}) {
    for (std::size_t r = 0; r < d_attn; ++r)
      for (std::size_t c = 0; c < d_feat; ++c) {
        const double eye = r == c ? 1.0 : 0.0;
        p->key.weight(r, c) = attention_scale * eye;
        p->query.weight(r, c) = attention_scale * eye;
        p->value.weight(r, c) = eye;
      }
    for (std::size_t r = 0; r < d_attn; ++r)
      for (std::size_t c = d_feat; c < p->query.d_in(); ++c) {
        p->query.weight(r, c) = 0.0;
        p->value.weight(r, c) = 0.0;
      }
    std::fill(p->out.weight.storage().begin(), p->out.weight.storage().end(), 0.0);
  }
  return m;
}

DetectorModel DetectorModel::zeros_like(const DetectorModel& m) {
  DetectorModel z = m;
  for (auto p : z.parameters()) std::fill(p.begin(), p.end(), 0.0);
  return z;
}

void DetectorModel::validate() const {
  short_params.validate();
  long_params.validate();
  if (classifier.d_out() != n_classes + 1)
    throw ShapeError("model: classifier width must be n_classes + 1");
  if (short_params.d_feat() != classifier.d_in() || long_params.d_feat() != classifier.d_in())
    throw ShapeError("model: attention and classifier depths disagree");
  if (short_params.d_ctx() != classifier.d_in() || long_params.d_ctx() != classifier.d_in() + kCodeLength)
    throw ShapeError("model: context widths must be d_feat and d_feat + 9");
}

std::vector<std::span<double>> DetectorModel::parameters() {
  auto out = short_params.parameters();
  for (auto p : long_params.parameters()) out.push_back(p);
  for (auto p : classifier.parameters()) out.push_back(p);
  return out;
}

std::vector<std::span<const double>> DetectorModel::parameters() const {
  auto out = short_params.parameters();
  for (auto p : long_params.parameters()) out.push_back(p);
  for (auto p : classifier.parameters()) out.push_back(p);
  return out;
}

namespace {

HeadMemory head_memory(const ModelInput& in) {
  HeadMemory mem;
  mem.short_term = in.short_term;
  mem.long_term = in.long_rows;
  mem.long_times = in.long_times;
  return mem;
}

}  // namespace

Matrix model_logits(const DetectorModel& model, const ModelInput& input, ForwardCache* cache) {
  Matrix features;
  if (const auto hm = head_mode(model.mode)) {
    features = head_forward(input.pooled, head_memory(input), model.short_params, model.long_params, *hm,
                            cache ? &cache->head : nullptr);
  } else {
    features = Matrix(input.pooled);
  }
  Matrix logits = linear_apply(features, model.classifier);
  if (cache) cache->features = std::move(features);
  return logits;
}

double model_loss_and_grad(const DetectorModel& model, const ModelInput& input, std::span<const int> labels,
                           DetectorModel& grad) {
  ForwardCache cache;
  const Matrix logits = model_logits(model, input, &cache);
  const auto ce = softmax_cross_entropy(logits, labels);
  const Matrix d_features = linear_backward(cache.features, model.classifier, ce.d_logits, grad.classifier);
  if (head_mode(model.mode))
    head_backward(cache.head, d_features, model.short_params, model.long_params, grad.short_params,
                  grad.long_params);
  return ce.loss;
}

double model_loss(const DetectorModel& model, const ModelInput& input, std::span<const int> labels) {
  return softmax_cross_entropy(model_logits(model, input), labels).loss;
}

std::vector<ProposalPrediction> predict_from_logits(MatrixView logits) {
  const Matrix probs = softmax_rows(logits, 1.0);
  std::vector<ProposalPrediction> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[i] = ProposalPrediction{static_cast<int>(best), row[best]};
  }
  return out;
}

std::vector<ProposalPrediction> predict(const DetectorModel& model, const ModelInput& input) {
  return predict_from_logits(model_logits(model, input));
}

namespace {

constexpr char kModelMagic[8] = {'C', 'A', 'M', 'C', 'T', 'X', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;
constexpr std::size_t kModelChecksumOffset = 12;

}  // namespace

std::vector<std::uint8_t> encode_model(const DetectorModel& model) {
  model.validate();
  binio::Writer w;
  w.put_bytes(std::string_view(kModelMagic, sizeof(kModelMagic)));
  w.put(kModelVersion);
  w.put(std::uint64_t{0});
  w.put(static_cast<std::uint8_t>(model.mode));
  w.put(model.n_classes);
  w.put(static_cast<std::uint32_t>(model.d_feat()));
  w.put(static_cast<std::uint32_t>(model.short_params.d_attn()));
  w.put(static_cast<std::uint32_t>(model.long_params.d_attn()));
  w.put(model.short_params.temperature);
  w.put(model.long_params.temperature);
  w.put(model.horizon);
  w.put(model.extractor_seed);
  for (auto p : model.parameters())
    for (double v : p) w.put(v);
  w.patch_u64(kModelChecksumOffset, binio::fnv1a64(w.bytes().subspan(kModelChecksumOffset + 8)));
  return std::move(w.buffer());
}

DetectorModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kModelMagic) || std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0)
    throw FormatError("model: bad magic", 0);
  binio::Reader r(bytes);
  r.seek(sizeof(kModelMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion) throw FormatError("model: unsupported version " + std::to_string(version), 8);
  const auto checksum = r.get<std::uint64_t>();
  if (checksum != binio::fnv1a64(bytes.subspan(kModelChecksumOffset + 8)))
    throw FormatError("model: checksum mismatch", kModelChecksumOffset);
  const auto mode_pos = r.position();
  const auto mode = r.get<std::uint8_t>();
  if (mode > static_cast<std::uint8_t>(ContextMode::st_lt)) throw FormatError("model: bad mode", mode_pos);
  const auto n_classes = r.get<std::uint32_t>();
  const auto d_feat = r.get<std::uint32_t>();
  const auto da_short = r.get<std::uint32_t>();
  const auto da_long = r.get<std::uint32_t>();
  const auto t_short = r.get<double>();
  const auto t_long = r.get<double>();
  const auto shapes_end = r.position();
  if (n_classes == 0 || d_feat == 0 || da_short == 0 || da_long == 0 || n_classes > 1u << 16 ||
      d_feat > 1u << 16 || da_short > 1u << 16 || da_long > 1u << 16)
    throw FormatError("model: bad shapes", mode_pos);
  if (!(t_short > 0.0) || !(t_long > 0.0)) throw FormatError("model: bad temperature", shapes_end - 16);
  DetectorModel m;
  m.mode = static_cast<ContextMode>(mode);
  m.n_classes = n_classes;
  m.short_params = AttentionParams::zeros(d_feat, d_feat, da_short, t_short);
  m.long_params = AttentionParams::zeros(d_feat, d_feat + kCodeLength, da_long, t_long);
  m.classifier = LinearMap::zeros(d_feat, n_classes + 1);
  m.horizon = r.get<std::int64_t>();
  m.extractor_seed = r.get<std::uint64_t>();
  std::size_t total = 0;
  for (auto p : m.parameters()) total += p.size();
  r.require(total * 8);
  for (auto p : m.parameters())
    for (double& v : p) {
      v = r.get<double>();
      if (!std::isfinite(v)) throw FormatError("model: non-finite parameter", r.position() - 8);
    }
  if (r.remaining() != 0) throw FormatError("model: trailing bytes", r.position());
  return m;
}

void write_model(const DetectorModel& model, const std::filesystem::path& path) {
  binio::write_file(path, encode_model(model));
}

DetectorModel read_model(const std::filesystem::path& path) { return decode_model(binio::read_file(path)); }

}  // namespace camctx
